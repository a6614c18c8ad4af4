#pragma once

// Laughlin-state growing: effective rapid-adiabatic-passage flux insertion
// between the lowest (l = 3m) and first (l = 3m + 1) manifolds, alternated with
// a resonant single-photon pump on l = 0. Energies in units of V0, times in 1/V0
// whenever V0 = 1; the equations themselves are unit-agnostic.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csv.hpp"
#include "fock.hpp"
#include "fqh.hpp"
#include "krylov.hpp"
#include "numeric.hpp"

namespace fluxgrow
{
    struct ValidityFlag
    {
        std::string name;
        double ratio = 0.0;
        bool satisfied = false;
    };

    struct ProtocolConfig
    {
        double V0 = 1.0;
        double Delta0 = 10.0;
        double Omega_p = 0.05;
        double g_a = 0.2;
        double g_b = 0.2;
        double tau_f = 5000.0;
        int N_target = 3;
        std::vector<int> lll_modes;   ///< l = 3m; empty selects l <= 6(N_target - 1) + 3
        std::vector<int> first_modes; ///< l = 3m + 1; same default truncation
        double gamma_eff = 0.0;
        std::vector<double> Lambda_N;
        double Delta_LN = 0.2; ///< many-body gap scale entering the validity ratios
        double validity_threshold = 0.25;
        bool override_validity = false;
        double ramp_fraction = 0.0; ///< sin^2 switching of g_a, g_b over this fraction of each half
        double dt = 1.0;
        double sample_interval = 10.0;
        KrylovOptions krylov{};

        int mode_cutoff() const { return 6 * std::max(N_target - 1, 0) + 3; }

        std::vector<int> resolved_lll_modes() const
        {
            if (!lll_modes.empty())
                return lll_modes;
            std::vector<int> out;
            for (int l = 0; l <= mode_cutoff(); l += 3)
                out.push_back(l);
            return out;
        }

        std::vector<int> resolved_first_modes() const
        {
            if (!first_modes.empty())
                return first_modes;
            std::vector<int> out;
            for (int l = 1; l <= mode_cutoff(); l += 3)
                out.push_back(l);
            return out;
        }

        std::vector<ValidityFlag> validity() const
        {
            auto flag = [&](std::string name, double ratio) {
                return ValidityFlag{std::move(name), ratio, ratio <= validity_threshold};
            };
            return {flag("g_a_over_Delta_LN", g_a / Delta_LN), flag("g_b_over_Delta_LN", g_b / Delta_LN),
                    flag("Omega_p_over_V0", Omega_p / V0),
                    flag("sweep_bound_over_tau_f", 4.0 * Delta0 / (Delta_LN * Delta_LN * tau_f))};
        }

        bool valid() const
        {
            for (const auto& f : validity())
                if (!f.satisfied)
                    return false;
            return true;
        }

        void validate() const
        {
            std::vector<std::string> bad;
            if (!(V0 > 0.0))
                bad.push_back("V0");
            if (!(Delta0 > 0.0))
                bad.push_back("Delta0");
            if (!(Omega_p > 0.0))
                bad.push_back("Omega_p");
            if (!(g_a >= 0.0))
                bad.push_back("g_a");
            if (!(g_b >= 0.0))
                bad.push_back("g_b");
            if (!(tau_f > 0.0))
                bad.push_back("tau_f");
            if (N_target < 1)
                bad.push_back("N_target");
            if (!(gamma_eff >= 0.0))
                bad.push_back("gamma_eff");
            if (!(Delta_LN > 0.0))
                bad.push_back("Delta_LN");
            if (!(ramp_fraction >= 0.0 && ramp_fraction <= 0.5))
                bad.push_back("ramp_fraction");
            if (!(dt > 0.0))
                bad.push_back("dt");
            if (!(sample_interval > 0.0))
                bad.push_back("sample_interval");
            for (int l : resolved_lll_modes())
                if (l < 0 || l % 3 != 0)
                {
                    bad.push_back("lll_modes");
                    break;
                }
            for (int l : resolved_first_modes())
                if (l < 0 || l % 3 != 1)
                {
                    bad.push_back("first_modes");
                    break;
                }
            if (!bad.empty())
            {
                std::string msg = "ProtocolConfig: invalid";
                for (const auto& b : bad)
                    msg += " " + b;
                throw std::invalid_argument(msg);
            }
        }
    };

    /// Delta(t) = -Delta0 + (4 Delta0 / tau_f) |t - tau_f / 2| on [0, tau_f].
    inline double sweep_detuning(double t, double Delta0, double tau_f)
    {
        return -Delta0 + 4.0 * Delta0 / tau_f * std::abs(t - 0.5 * tau_f);
    }

    enum class SweepPhase
    {
        StepI,
        StepII,
    };

    /// Diagonal operator giving Delta to every photon in an l = 3m + 1 mode.
    inline SparseOperator build_h0_rotating(const FockBasis& basis, double Delta)
    {
        return manifold_number(basis, 1) * Delta;
    }

    /// StepI: g_a sum (a+_{3m} a_{3m+1} + h.c.); StepII: g_b sum (a+_{3m+1} a_{3m+3} + h.c.).
    inline SparseOperator build_hc(const FockBasis& basis, double g_a, double g_b, SweepPhase phase)
    {
        const int shift = phase == SweepPhase::StepI ? -1 : 2;
        const double g = phase == SweepPhase::StepI ? g_a : g_b;
        std::vector<Eigen::Triplet<double>> triplets;
        std::vector<int> unmatched;
        bool any = false;
        for (int l : basis.modes())
        {
            if (l % 3 != 1)
                continue;
            const int partner = l + shift;
            if (!basis.position(partner))
            {
                unmatched.push_back(l);
                continue;
            }
            any = true;
            const auto hop = hopping(basis, partner, l);
            for (Eigen::Index r = 0; r < hop.matrix().outerSize(); ++r)
                for (SparseOperator::Matrix::InnerIterator it(hop.matrix(), r); it; ++it)
                {
                    triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), g * it.value());
                    triplets.emplace_back(static_cast<int>(it.col()), static_cast<int>(it.row()), g * it.value());
                }
        }
        if (!any)
        {
            std::string msg = "build_hc: no coupled mode pair in the basis";
            for (int l : unmatched)
                msg += " (l=" + std::to_string(l) + " lacks l=" + std::to_string(l + shift) + ")";
            throw std::invalid_argument(msg);
        }
        return SparseOperator::from_triplets(basis.dimension(), triplets);
    }

    /// Omega_p (a_0^dagger + a_0).
    inline SparseOperator build_pump(const FockBasis& basis, double Omega_p)
    {
        const auto up = creation(basis, 0);
        return (up + transpose(up)) * Omega_p;
    }

    /// Time-dependent Hamiltonian sum_k c_k(t) O_k.
    class TimeDependentHamiltonian
    {
    public:
        using Coefficient = std::function<double(double)>;

        void add(const SparseOperator& op, Coefficient c) { m_terms.push_back({op, std::move(c)}); }

        std::vector<double> coefficients(double t) const
        {
            std::vector<double> c(m_terms.size());
            for (std::size_t k = 0; k < c.size(); ++k)
                c[k] = m_terms[k].coefficient(t);
            return c;
        }

        void apply(const std::vector<double>& c, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) const
        {
            for (std::size_t k = 0; k < m_terms.size(); ++k)
                if (c[k] != 0.0)
                    m_terms[k].op.apply_add(v, out, std::complex<double>(c[k], 0.0));
        }

    private:
        struct Term
        {
            SparseOperator op;
            Coefficient coefficient;
        };
        std::vector<Term> m_terms;
    };

    struct PropagationStats
    {
        long steps = 0;
        long matvecs = 0;
        long substeps = 0;
        double max_error_estimate = 0.0;
        double max_norm_drift = 0.0;
    };

    /// Fourth-order commutator-free Magnus step from t to t + h.
    inline void cf4_step(const TimeDependentHamiltonian& H, Eigen::VectorXcd& psi, double t, double h,
                         const KrylovOptions& opt, PropagationStats& stats)
    {
        const double s3 = std::sqrt(3.0);
        const double a1 = 0.25 + s3 / 6.0, a2 = 0.25 - s3 / 6.0;
        const auto c1 = H.coefficients(t + (0.5 - s3 / 6.0) * h);
        const auto c2 = H.coefficients(t + (0.5 + s3 / 6.0) * h);
        KrylovStats ks;
        for (auto [w1, w2] : {std::pair{a1, a2}, std::pair{a2, a1}})
        {
            std::vector<double> c(c1.size());
            for (std::size_t k = 0; k < c.size(); ++k)
                c[k] = w1 * c1[k] + w2 * c2[k];
            ComplexApply apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { H.apply(c, x, y); };
            psi = lanczos_expm(apply, psi, h, opt, &ks);
        }
        ++stats.steps;
        stats.matvecs += ks.matvecs;
        stats.substeps += ks.substeps;
        stats.max_error_estimate = std::max(stats.max_error_estimate, ks.max_error_estimate);
    }

    /// Operators, reference states and observables on the mixed-N two-manifold basis.
    class GrowingModel
    {
    public:
        explicit GrowingModel(ProtocolConfig config)
            : m_config(std::move(config)), m_basis(make_basis(m_config))
        {
            m_hint = build_hint(m_basis, m_config.V0);
            m_first = manifold_number(m_basis, 1);
            m_ha = build_hc(m_basis, m_config.g_a, m_config.g_b, SweepPhase::StepI);
            m_hb = build_hc(m_basis, m_config.g_a, m_config.g_b, SweepPhase::StepII);
            m_pump = build_pump(m_basis, m_config.Omega_p);
            m_number = number_operator(m_basis);
            m_angular = total_angular_momentum(m_basis);
        }

        const ProtocolConfig& config() const { return m_config; }
        const FockBasis& basis() const { return m_basis; }
        const SparseOperator& hint() const { return m_hint; }
        const SparseOperator& first_manifold_number() const { return m_first; }
        const SparseOperator& hc(SweepPhase p) const { return p == SweepPhase::StepI ? m_ha : m_hb; }
        const SparseOperator& pump() const { return m_pump; }
        const SparseOperator& number() const { return m_number; }
        const SparseOperator& angular_momentum() const { return m_angular; }

        Eigen::VectorXcd fock_vector(const FockState& s) const
        {
            auto i = m_basis.find(s);
            if (!i)
                throw std::out_of_range("GrowingModel: " + to_string(s) + " is outside the basis");
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m_basis.dimension()));
            v(static_cast<Eigen::Index>(*i)) = 1.0;
            return v;
        }

        Eigen::VectorXcd vacuum() const { return fock_vector({}); }

        /// Embedded polynomial state, or nullopt when its support leaves the basis.
        std::optional<Eigen::VectorXcd> polynomial_vector(int N, int m) const
        {
            if (N < 1 || N > m_config.N_target || N > max_expansion_photons)
                return std::nullopt;
            const auto s = polynomial_state(N, m);
            if (s.max_mode() > 0 && !m_basis.position(s.max_mode()))
                return std::nullopt;
            try
            {
                return Eigen::VectorXcd(s.embed(m_basis).cast<std::complex<double>>());
            }
            catch (const std::out_of_range&)
            {
                return std::nullopt;
            }
        }

        static double population(const Eigen::VectorXcd& target, const Eigen::VectorXcd& psi)
        {
            return std::norm(target.dot(psi));
        }

        double mean(const SparseOperator& op, const Eigen::VectorXcd& psi) const
        {
            return op.expectation(psi) / psi.squaredNorm();
        }

        /// Probability weight of every (N, L) sector restricted to the lowest manifold.
        std::map<std::pair<int, int>, double> lll_sector_weights(const Eigen::VectorXcd& psi) const
        {
            std::map<std::pair<int, int>, double> w;
            for (std::size_t i = 0; i < m_basis.dimension(); ++i)
            {
                if (m_first.coeff(i, i) != 0.0)
                    continue;
                w[{m_basis.photon_number(i), m_basis.angular_momentum(i)}] += std::norm(psi(static_cast<Eigen::Index>(i)));
            }
            return w;
        }

    private:
        static FockBasis make_basis(const ProtocolConfig& c)
        {
            c.validate();
            auto modes = c.resolved_lll_modes();
            for (int l : c.resolved_first_modes())
                modes.push_back(l);
            if (std::find(modes.begin(), modes.end(), 0) == modes.end())
                throw std::invalid_argument("GrowingModel: the pumped mode l=0 must be in the basis");
            return FockBasis(modes, 0, c.N_target);
        }

        ProtocolConfig m_config;
        FockBasis m_basis;
        SparseOperator m_hint, m_first, m_ha, m_hb, m_pump, m_number, m_angular;
    };

    struct StageRecord
    {
        std::string name;
        int photons = 0;       ///< photon number the stage acts on
        double t_start = 0.0;
        double t_end = 0.0;
        double duration = 0.0;
        double reference = 0.0; ///< pre-pump 2qh overlap, or post-sweep target-sector weight
        double target = 0.0;    ///< post-pump Laughlin population, or target L
    };

    struct StateSnapshot
    {
        double t = 0.0;
        std::string stage;
        Eigen::VectorXcd state;
    };

    struct ProtocolTrace
    {
        std::vector<std::string> columns;
        std::vector<double> t;
        std::vector<std::vector<double>> rows;
        std::vector<std::string> stage;
        std::vector<StateSnapshot> snapshots;
        std::vector<StageRecord> stages;
        std::vector<std::string> warnings;
        PropagationStats stats;

        const Eigen::VectorXcd& final_state() const
        {
            if (snapshots.empty())
                throw std::logic_error("ProtocolTrace: empty trace");
            return snapshots.back().state;
        }

        double value(std::size_t row, const std::string& column) const
        {
            auto it = std::find(columns.begin(), columns.end(), column);
            if (it == columns.end())
                throw std::out_of_range("ProtocolTrace: no column " + column);
            return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
        }

        double final_value(const std::string& column) const
        {
            if (rows.empty())
                throw std::logic_error("ProtocolTrace: empty trace");
            return value(rows.size() - 1, column);
        }

        /// Appends `next`, dropping its first sample when it repeats the current last time.
        void append(const ProtocolTrace& next)
        {
            if (columns.empty())
                columns = next.columns;
            std::size_t first = 0;
            if (!t.empty() && !next.t.empty() && next.t.front() == t.back())
                first = 1;
            for (std::size_t i = first; i < next.t.size(); ++i)
            {
                t.push_back(next.t[i]);
                rows.push_back(next.rows[i]);
                stage.push_back(next.stage[i]);
            }
            snapshots.insert(snapshots.end(), next.snapshots.begin(), next.snapshots.end());
            stages.insert(stages.end(), next.stages.begin(), next.stages.end());
            warnings.insert(warnings.end(), next.warnings.begin(), next.warnings.end());
            stats.steps += next.stats.steps;
            stats.matvecs += next.stats.matvecs;
            stats.substeps += next.stats.substeps;
            stats.max_error_estimate = std::max(stats.max_error_estimate, next.stats.max_error_estimate);
            stats.max_norm_drift = std::max(stats.max_norm_drift, next.stats.max_norm_drift);
        }

        void write_csv(std::ostream& out) const
        {
            auto header = columns;
            header.insert(header.begin(), "t");
            header.push_back("stage");
            CsvWriter csv(out, header);
            for (std::size_t i = 0; i < t.size(); ++i)
            {
                std::vector<CsvCell> cells{t[i]};
                for (double v : rows[i])
                    cells.emplace_back(v);
                cells.emplace_back(stage[i]);
                csv.row(cells);
            }
        }
    };

    namespace detail
    {
        /// Trace observables: p_m for single-photon modes, Laughlin and 2-quasi-hole populations,
        /// mean N, mean L and the norm.
        class Observer
        {
        public:
            explicit Observer(const GrowingModel& model) : m_model(model)
            {
                for (int l : {0, 3, 6})
                    if (model.basis().position(l))
                        add("p_" + std::to_string(l), model.fock_vector({{l, 1}}));
                for (int N = 2; N <= model.config().N_target; ++N)
                    if (auto v = model.polynomial_vector(N, 0))
                        add("p_LN" + std::to_string(N), *v);
                for (int N = 1; N < model.config().N_target; ++N)
                    if (auto v = model.polynomial_vector(N, 2))
                        add("p_2qh" + std::to_string(N), *v);
                m_columns.insert(m_columns.end(), {"mean_N", "mean_L", "norm"});
            }

            const std::vector<std::string>& columns() const { return m_columns; }

            std::vector<double> operator()(const Eigen::VectorXcd& psi) const
            {
                std::vector<double> row;
                for (const auto& v : m_targets)
                    row.push_back(GrowingModel::population(v, psi));
                row.push_back(m_model.mean(m_model.number(), psi));
                row.push_back(m_model.mean(m_model.angular_momentum(), psi));
                row.push_back(psi.norm());
                return row;
            }

        private:
            void add(std::string name, Eigen::VectorXcd v)
            {
                m_columns.push_back(std::move(name));
                m_targets.push_back(std::move(v));
            }

            const GrowingModel& m_model;
            std::vector<std::string> m_columns;
            std::vector<Eigen::VectorXcd> m_targets;
        };

        /// Evolves psi over [t0, t0 + duration] in equal CF4 steps no longer than dt, sampling
        /// roughly every sample_interval. `offset` shifts the trace clock.
        inline ProtocolTrace propagate(const GrowingModel& model, const TimeDependentHamiltonian& H,
                                       const Eigen::VectorXcd& psi0, double t0, double duration, double offset,
                                       const std::string& label)
        {
            const auto& cfg = model.config();
            Observer observe(model);
            ProtocolTrace trace;
            trace.columns = observe.columns();
            Eigen::VectorXcd psi = psi0;
            const double norm0 = psi.norm();
            auto record = [&](double elapsed) {
                trace.t.push_back(offset + elapsed);
                trace.rows.push_back(observe(psi));
                trace.stage.push_back(label);
            };
            record(0.0);
            const long steps = std::max(1L, static_cast<long>(std::ceil(duration / cfg.dt - 1e-9)));
            const double h = duration / static_cast<double>(steps);
            const long every = std::max(1L, static_cast<long>(std::llround(cfg.sample_interval / h)));
            for (long k = 0; k < steps; ++k)
            {
                cf4_step(H, psi, t0 + static_cast<double>(k) * h, h, cfg.krylov, trace.stats);
                trace.stats.max_norm_drift = std::max(trace.stats.max_norm_drift, std::abs(psi.norm() - norm0));
                if ((k + 1) % every == 0 || k + 1 == steps)
                    record(k + 1 == steps ? duration : static_cast<double>(k + 1) * h);
            }
            trace.snapshots.push_back({offset + duration, label, psi});
            return trace;
        }

        inline double ramp(double s, double fraction)
        {
            if (fraction <= 0.0)
                return 1.0;
            if (s < fraction)
                return std::pow(std::sin(0.5 * pi * s / fraction), 2);
            if (s > 1.0 - fraction)
                return std::pow(std::sin(0.5 * pi * (1.0 - s) / fraction), 2);
            return 1.0;
        }

        /// Dominant (N, L) sector of the lowest manifold.
        inline std::pair<int, int> dominant_sector(const GrowingModel& model, const Eigen::VectorXcd& psi)
        {
            const auto w = model.lll_sector_weights(psi);
            std::pair<int, int> best{0, 0};
            double best_w = -1.0;
            for (const auto& [key, v] : w)
                if (v > best_w)
                {
                    best_w = v;
                    best = key;
                }
            return best;
        }

        inline void check_validity(const ProtocolConfig& cfg)
        {
            if (cfg.override_validity)
                return;
            std::string msg;
            for (const auto& f : cfg.validity())
                if (!f.satisfied)
                    msg += " " + f.name + "=" + std::to_string(f.ratio);
            if (!msg.empty())
                throw std::invalid_argument("growing protocol: validity flags violated (threshold " +
                                            std::to_string(cfg.validity_threshold) + "):" + msg +
                                            "; set override_validity to proceed");
        }
    } // namespace detail

    /// One full effective flux insertion: g_a on [0, tau_f/2], g_b on [tau_f/2, tau_f].
    inline ProtocolTrace flux_sweep(const GrowingModel& model, const Eigen::VectorXcd& state, double offset = 0.0,
                                    const std::string& label = "sweep")
    {
        const auto& cfg = model.config();
        detail::check_validity(cfg);
        const auto [N, L] = detail::dominant_sector(model, state);
        const double half = 0.5 * cfg.tau_f;
        ProtocolTrace trace;
        Eigen::VectorXcd psi = state;
        for (auto phase : {SweepPhase::StepI, SweepPhase::StepII})
        {
            const double t0 = phase == SweepPhase::StepI ? 0.0 : half;
            TimeDependentHamiltonian H;
            H.add(model.hint(), [](double) { return 1.0; });
            H.add(model.first_manifold_number(),
                  [&cfg](double t) { return sweep_detuning(t, cfg.Delta0, cfg.tau_f); });
            H.add(model.hc(phase), [&cfg, t0, half](double t) { return detail::ramp((t - t0) / half, cfg.ramp_fraction); });
            auto part = detail::propagate(model, H, psi, t0, half, offset + t0, label);
            psi = part.final_state();
            part.snapshots.clear();
            trace.append(part);
        }
        trace.snapshots.push_back({offset + cfg.tau_f, label, psi});

        const int L_target = L + 3 * N;
        const auto weights = model.lll_sector_weights(psi);
        auto it = weights.find({N, L_target});
        const double reached = it == weights.end() ? 0.0 : it->second;
        trace.stages.push_back({label, N, offset, offset + cfg.tau_f, cfg.tau_f, reached, static_cast<double>(L_target)});
        if (N > 0 && reached < 0.9)
            trace.warnings.push_back(label + ": adiabaticity violated, population " + std::to_string(reached) +
                                     " in target sector (N=" + std::to_string(N) + ", L=" + std::to_string(L_target) +
                                     ")");
        return trace;
    }

    /// Pi pulse of duration pi / (2 Omega_p |pump_overlap(N)|) under H_int + Delta0 N_first + pump.
    inline ProtocolTrace pump_pulse(const GrowingModel& model, const Eigen::VectorXcd& state, int N_current,
                                    double offset = 0.0, const std::string& label = "pump")
    {
        const auto& cfg = model.config();
        detail::check_validity(cfg);
        if (N_current < 0 || N_current >= cfg.N_target)
            throw std::invalid_argument("pump_pulse: N_current must lie in [0, N_target)");
        const double rabi = cfg.Omega_p * std::abs(pump_overlap(N_current));
        const double tau_p = pi / (2.0 * rabi);

        double pre = 1.0;
        if (N_current == 0)
            pre = GrowingModel::population(model.vacuum(), state);
        else if (auto qh = model.polynomial_vector(N_current, 2))
            pre = GrowingModel::population(*qh, state);
        else
            pre = 0.0;

        TimeDependentHamiltonian H;
        H.add(model.hint(), [](double) { return 1.0; });
        H.add(model.first_manifold_number(), [&cfg](double) { return cfg.Delta0; });
        H.add(model.pump(), [](double) { return 1.0; });
        auto trace = detail::propagate(model, H, state, 0.0, tau_p, offset, label);

        double post = 0.0;
        if (N_current + 1 == 1)
            post = GrowingModel::population(model.fock_vector({{0, 1}}), trace.final_state());
        else if (auto ln = model.polynomial_vector(N_current + 1, 0))
            post = GrowingModel::population(*ln, trace.final_state());
        trace.stages.push_back({label, N_current, offset, offset + tau_p, tau_p, pre, post});
        if (pre < 0.9)
            trace.warnings.push_back(label + ": pre-pulse overlap with the 2-quasi-hole state is " +
                                     std::to_string(pre));
        return trace;
    }

    /// pump, then (sweep, sweep, pump) per photon until N_target photons.
    inline ProtocolTrace run_growing_protocol(const GrowingModel& model)
    {
        const auto& cfg = model.config();
        detail::check_validity(cfg);
        ProtocolTrace trace;
        Eigen::VectorXcd psi = model.vacuum();
        double clock = 0.0;
        auto advance = [&](ProtocolTrace part) {
            psi = part.final_state();
            clock = part.t.back();
            trace.append(part);
        };
        advance(pump_pulse(model, psi, 0, clock, "pump1"));
        for (int N = 1; N < cfg.N_target; ++N)
        {
            const std::string n = std::to_string(N);
            advance(flux_sweep(model, psi, clock, "sweep" + n + "a"));
            advance(flux_sweep(model, psi, clock, "sweep" + n + "b"));
            advance(pump_pulse(model, psi, N, clock, "pump" + std::to_string(N + 1)));
        }
        return trace;
    }

    inline ProtocolTrace run_growing_protocol(const ProtocolConfig& config)
    {
        return run_growing_protocol(GrowingModel(config));
    }

    /// exp[-(N/2)((1/2) gamma tau (N+1) + Lambda^2 / (Delta tau)^2)].
    inline double fidelity_scaling(int N, double gamma_eff, double tau, double Delta_LN, double Lambda_N)
    {
        if (N < 0 || !(gamma_eff >= 0.0) || !(tau > 0.0) || !(Delta_LN > 0.0) || !(Lambda_N >= 0.0))
            throw std::invalid_argument("fidelity_scaling: requires N >= 0, tau, Delta_LN > 0 and gamma, Lambda >= 0");
        const double loss = 0.5 * gamma_eff * tau * (N + 1);
        const double diabatic = Lambda_N * Lambda_N / (Delta_LN * Delta_LN * tau * tau);
        return std::exp(-0.5 * N * (loss + diabatic));
    }

    /// Stationary point tau* = (4 Lambda^2 / (gamma (N+1) Delta^2))^{1/3} of fidelity_scaling.
    inline double optimal_tau(int N, double gamma_eff, double Delta_LN, double Lambda_N)
    {
        if (N < 1 || !(gamma_eff > 0.0) || !(Delta_LN > 0.0) || !(Lambda_N > 0.0))
            throw std::invalid_argument("optimal_tau: requires N >= 1 and positive gamma, Delta_LN, Lambda");
        return std::cbrt(4.0 * Lambda_N * Lambda_N / (gamma_eff * (N + 1) * Delta_LN * Delta_LN));
    }
} // namespace fluxgrow
