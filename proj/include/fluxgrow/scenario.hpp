#pragma once

// Declarative scenario runner: strict JSON configs, CSV traces and JSON summaries.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "couplings.hpp"
#include "csv.hpp"
#include "fqh.hpp"
#include "growing.hpp"
#include "losses.hpp"
#include "numeric.hpp"
#include "stirap.hpp"

namespace fluxgrow
{
    using Json = nlohmann::ordered_json;

    inline constexpr const char* code_version = "fluxgrow 1.0.0";

    /// Invalid configuration; carries one message per offending key.
    class ConfigError : public std::runtime_error
    {
    public:
        explicit ConfigError(std::vector<std::string> problems)
            : std::runtime_error(join(problems)), m_problems(std::move(problems))
        {
        }
        const std::vector<std::string>& problems() const { return m_problems; }

    private:
        static std::string join(const std::vector<std::string>& p)
        {
            std::string out = "invalid configuration:";
            for (const auto& s : p)
                out += "\n  " + s;
            return out;
        }
        std::vector<std::string> m_problems;
    };

    struct KeySpec
    {
        std::string name;
        std::string type;
        std::string description;
        bool required = false;
    };

    struct ScenarioSchema
    {
        std::string name;
        std::string description;
        std::vector<KeySpec> keys;
        std::vector<std::string> notes; ///< alternatives such as "Omega_T or Omega_MHz"
    };

    inline const std::vector<ScenarioSchema>& scenario_schemas()
    {
        static const std::vector<ScenarioSchema> schemas{
            {"couplings",
             "coupling matrix elements chi (step one) or chi~ (step two)",
             {{"profile", "string", "KappaStep1 or KappaTildeStep2", true},
              {"a", "number", "cutoff r0/w0, required for KappaStep1", false},
              {"m_max", "integer", "largest sector index m", true},
              {"n_max", "integer", "largest radial index", true},
              {"method", "string", "Quadrature (default) or AnalyticLimit", false}},
             {}},
            {"stirap",
             "chained two-step flux insertion of a single photon",
             {{"Omega_T", "number", "peak Rabi frequency times T", false},
              {"g_T", "number", "cavity coupling times T", false},
              {"delta_T", "number", "two-photon detuning times T (default 0)", false},
              {"gamma_T", "number", "excited-state decay times T (default 0)", false},
              {"Omega_MHz", "number", "Omega / 2 pi in MHz", false},
              {"g_MHz", "number", "g / 2 pi in MHz", false},
              {"delta_MHz", "number", "delta / 2 pi in MHz", false},
              {"gamma_MHz", "number", "gamma / 2 pi in MHz", false},
              {"T_us", "number", "pulse time scale in microseconds, required with MHz inputs", false},
              {"a", "number", "cutoff r0/w0", true},
              {"m", "integer", "starting sector (default 0)", false},
              {"n_max", "integer", "radial truncation (default 5)", false},
              {"cycles", "integer", "number of full flux insertions (default 1)", false},
              {"tau1", "number", "pulse offset in units of T (default 6)", false},
              {"points_per_step", "integer", "trace samples per step (default 241)", false},
              {"convergence_report", "boolean", "rerun with n_max + 2 (default false)", false},
              {"scan_Omega", "array", "Omega values for a step-one transfer scan, same unit as Omega", false},
              {"scan_a", "array", "cutoff values for the scan (default: a)", false}},
             {"give Omega, g as *_T groups or as *_MHz with T_us"}},
            {"losses",
             "non-adiabatic loss and flux-insertion fidelity surface",
             {{"gamma_T", "number", "excited-state decay times T", true},
              {"a", "number", "cutoff r0/w0 (default 0.005)", false},
              {"xi", "number", "Gaussian density width / w0 (default 0.25)", false},
              {"tau1", "number", "pulse offset (default 6)", false},
              {"Omega_T", "array", "Omega T grid: list, or {\"lo\", \"hi\", \"count\"}", true},
              {"g_T", "array", "g T grid: list, or {\"lo\", \"hi\", \"count\"}", true}},
             {}},
            {"fqh-report",
             "interaction spectra, Laughlin and quasi-hole states, pump overlaps",
             {{"N_max", "integer", "largest photon number (default 3, at most 5)", false},
              {"V0", "number", "Haldane pseudopotential (default 1)", false},
              {"sectors", "array", "extra [N, L] sectors to diagonalize", false},
              {"m_max", "integer", "orbital cutoff override", false},
              {"dense_limit", "integer", "largest dimension solved densely (default 2000)", false}},
             {}},
            {"grow",
             "Laughlin-state growing protocol",
             {{"V0", "number", "Haldane pseudopotential; required with raw energies (default 1)", false},
              {"Delta0_over_V0", "number", "Landau-level splitting", false},
              {"Omega_p_over_V0", "number", "pump amplitude", false},
              {"g_a_over_V0", "number", "step-I sweep coupling", false},
              {"g_b_over_V0", "number", "step-II sweep coupling", false},
              {"tau_f_V0", "number", "sweep duration times V0", false},
              {"Delta0", "number", "raw Landau-level splitting", false},
              {"Omega_p", "number", "raw pump amplitude", false},
              {"g_a", "number", "raw step-I coupling", false},
              {"g_b", "number", "raw step-II coupling", false},
              {"tau_f", "number", "raw sweep duration", false},
              {"N_target", "integer", "photons to grow (default 3)", false},
              {"Delta_LN_over_V0", "number", "gap scale for the validity ratios (default 0.2)", false},
              {"validity_threshold", "number", "largest accepted validity ratio (default 0.25)", false},
              {"override_validity", "boolean", "run despite violated validity flags (default false)", false},
              {"ramp_fraction", "number", "sin^2 switching fraction of g_a, g_b (default 0)", false},
              {"dt_V0", "number", "propagation step times V0 (default 1)", false},
              {"sample_interval_V0", "number", "trace sampling interval times V0 (default 10)", false},
              {"krylov_tol", "number", "Krylov error bound per exponential (default 1e-9)", false},
              {"lll_modes", "array", "explicit l = 3m modes", false},
              {"first_modes", "array", "explicit l = 3m + 1 modes", false},
              {"gamma_eff_over_V0", "number", "effective loss rate for the scaling formula", false},
              {"Lambda_N", "array", "non-adiabaticity constants for N = 1, 2, ...", false}},
             {"give energies as *_over_V0 ratios or as raw values together with V0"}},
        };
        return schemas;
    }

    inline const ScenarioSchema& schema_for(const std::string& scenario)
    {
        for (const auto& s : scenario_schemas())
            if (s.name == scenario)
                return s;
        throw ConfigError({"scenario: unknown value '" + scenario + "'"});
    }

    inline std::string list_scenarios()
    {
        std::ostringstream out;
        for (const auto& s : scenario_schemas())
        {
            out << s.name << ": " << s.description << "\n";
            for (const auto& k : s.keys)
                out << "  " << (k.required ? "* " : "  ") << k.name << " (" << k.type << ") " << k.description << "\n";
            for (const auto& n : s.notes)
                out << "  note: " << n << "\n";
        }
        out << "keys marked * are required\n";
        return out.str();
    }

    struct ScenarioConfig
    {
        std::string scenario;
        Json parameters = Json::object();
        std::string output;
        std::set<std::string> formats{"csv", "json"};
        Json source; ///< config as read
        std::vector<std::string> problems; ///< top-level issues, reported with the parameter check

        bool wants(const std::string& f) const { return formats.count(f) != 0; }
    };

    inline ScenarioConfig parse_config(const Json& doc)
    {
        std::vector<std::string> problems;
        ScenarioConfig cfg;
        cfg.source = doc;
        if (!doc.is_object())
            throw ConfigError({"config: top level must be an object"});
        for (const auto& [key, value] : doc.items())
            if (key != "scenario" && key != "parameters" && key != "output" && key != "formats")
                problems.push_back(key + ": unknown key");
        if (!doc.contains("scenario") || !doc["scenario"].is_string())
            problems.push_back("scenario: required string");
        else
        {
            cfg.scenario = doc["scenario"].get<std::string>();
            if (std::none_of(scenario_schemas().begin(), scenario_schemas().end(),
                             [&](const ScenarioSchema& s) { return s.name == cfg.scenario; }))
                problems.push_back("scenario: unknown value '" + cfg.scenario + "'");
        }
        if (doc.contains("parameters"))
        {
            if (!doc["parameters"].is_object())
                problems.push_back("parameters: must be an object");
            else
                cfg.parameters = doc["parameters"];
        }
        if (doc.contains("output"))
        {
            if (!doc["output"].is_string())
                problems.push_back("output: must be a string");
            else
                cfg.output = doc["output"].get<std::string>();
        }
        if (doc.contains("formats"))
        {
            cfg.formats.clear();
            if (!doc["formats"].is_array())
                problems.push_back("formats: must be an array");
            else
                for (const auto& f : doc["formats"])
                {
                    if (!f.is_string() || (f != "csv" && f != "json"))
                        problems.push_back("formats: entries must be \"csv\" or \"json\"");
                    else
                        cfg.formats.insert(f.get<std::string>());
                }
        }
        if (cfg.scenario.empty() || std::none_of(scenario_schemas().begin(), scenario_schemas().end(),
                                                 [&](const ScenarioSchema& s) { return s.name == cfg.scenario; }))
            throw ConfigError(problems);
        cfg.problems = std::move(problems);
        return cfg;
    }

    inline ScenarioConfig load_config(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError({"config: cannot read " + path});
        Json doc;
        try
        {
            doc = Json::parse(in);
        }
        catch (const Json::parse_error& e)
        {
            throw ConfigError({std::string("config: ") + e.what()});
        }
        return parse_config(doc);
    }

    /// Typed access to a parameter object; collects every problem before failing.
    class ParamReader
    {
    public:
        ParamReader(const ScenarioConfig& cfg, const ScenarioSchema& schema)
            : m_params(cfg.parameters), m_problems(cfg.problems)
        {
            const auto& params = cfg.parameters;
            std::set<std::string> allowed;
            for (const auto& k : schema.keys)
            {
                allowed.insert(k.name);
                if (k.required && !params.contains(k.name))
                    m_problems.push_back(k.name + ": required key missing");
            }
            for (const auto& [key, value] : params.items())
                if (!allowed.count(key))
                    m_problems.push_back(key + ": unknown key");
        }

        bool has(const std::string& key) const { return m_params.contains(key); }

        std::optional<double> number(const std::string& key)
        {
            if (!has(key))
                return std::nullopt;
            const auto& v = m_params[key];
            if (!v.is_number())
            {
                m_problems.push_back(key + ": expected a number");
                return std::nullopt;
            }
            return v.get<double>();
        }

        double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

        std::optional<int> integer(const std::string& key)
        {
            if (!has(key))
                return std::nullopt;
            const auto& v = m_params[key];
            if (!v.is_number_integer())
            {
                m_problems.push_back(key + ": expected an integer");
                return std::nullopt;
            }
            return v.get<int>();
        }

        int integer(const std::string& key, int fallback) { return integer(key).value_or(fallback); }

        bool boolean(const std::string& key, bool fallback)
        {
            if (!has(key))
                return fallback;
            const auto& v = m_params[key];
            if (!v.is_boolean())
            {
                m_problems.push_back(key + ": expected a boolean");
                return fallback;
            }
            return v.get<bool>();
        }

        std::optional<std::string> string(const std::string& key)
        {
            if (!has(key))
                return std::nullopt;
            const auto& v = m_params[key];
            if (!v.is_string())
            {
                m_problems.push_back(key + ": expected a string");
                return std::nullopt;
            }
            return v.get<std::string>();
        }

        template <typename T>
        std::vector<T> list(const std::string& key)
        {
            std::vector<T> out;
            if (!has(key))
                return out;
            const auto& v = m_params[key];
            if (!v.is_array())
            {
                m_problems.push_back(key + ": expected an array");
                return out;
            }
            for (const auto& e : v)
            {
                const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
                if (!ok)
                {
                    m_problems.push_back(key + ": array entries must be numbers");
                    return {};
                }
                out.push_back(e.get<T>());
            }
            return out;
        }

        /// A grid given as a list or as {"lo", "hi", "count"}.
        std::vector<double> grid(const std::string& key)
        {
            if (!has(key))
                return {};
            const auto& v = m_params[key];
            if (v.is_object())
            {
                const bool ok = v.size() == 3 && v.contains("lo") && v.contains("hi") && v.contains("count") &&
                                v["lo"].is_number() && v["hi"].is_number() && v["count"].is_number_integer() &&
                                v["count"].get<long long>() > 0;
                if (!ok)
                {
                    m_problems.push_back(key + ": grid objects need exactly lo, hi and a positive integer count");
                    return {};
                }
                return linspace(v["lo"].get<double>(), v["hi"].get<double>(), v["count"].get<std::size_t>());
            }
            return list<double>(key);
        }

        void problem(std::string p) { m_problems.push_back(std::move(p)); }
        const std::vector<std::string>& problems() const { return m_problems; }

        void finish() const
        {
            if (!m_problems.empty())
                throw ConfigError(m_problems);
        }

    private:
        const Json& m_params;
        std::vector<std::string> m_problems;
    };

    struct ScenarioOutcome
    {
        std::vector<std::string> files;
        Json summary = Json::object();
        Json resolved = Json::object();
    };

    namespace detail
    {
        class OutputDir
        {
        public:
            OutputDir(std::filesystem::path dir, std::vector<std::string>& files) : m_dir(std::move(dir)), m_files(files)
            {
            }

            template <typename Writer>
            void write(const std::string& name, Writer&& writer)
            {
                std::filesystem::create_directories(m_dir);
                auto out = open_output((m_dir / name).string());
                writer(out);
                if (!out)
                    throw std::runtime_error("failed writing " + (m_dir / name).string());
                m_files.push_back(name);
            }

            void write_json(const std::string& name, const Json& j)
            {
                write(name, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
            }

        private:
            std::filesystem::path m_dir;
            std::vector<std::string>& m_files;
        };

        inline Json stats_json(const PropagationStats& s)
        {
            return {{"steps", s.steps},
                    {"matvecs", s.matvecs},
                    {"krylov_substeps", s.substeps},
                    {"max_krylov_error_estimate", s.max_error_estimate},
                    {"max_norm_drift", s.max_norm_drift}};
        }

        inline ScenarioOutcome run_couplings(const ScenarioConfig& cfg, OutputDir& dir, unsigned jobs)
        {
            ParamReader r(cfg, schema_for("couplings"));
            const auto profile_name = r.string("profile");
            const auto a = r.number("a");
            const int m_max = r.integer("m_max", 0);
            const int n_max = r.integer("n_max", 0);
            const auto method_name = r.string("method").value_or("Quadrature");
            SpatialProfile profile = SpatialProfile::step2();
            if (profile_name == "KappaStep1")
            {
                if (!a || !(*a > 0.0))
                    r.problem("a: required positive number for KappaStep1");
                else
                    profile = SpatialProfile::step1(*a);
            }
            else if (profile_name && profile_name != "KappaTildeStep2")
                r.problem("profile: must be KappaStep1 or KappaTildeStep2");
            else if (a)
                r.problem("a: not used by KappaTildeStep2");
            CouplingMethod method = CouplingMethod::Quadrature;
            if (method_name == "AnalyticLimit")
                method = CouplingMethod::AnalyticLimit;
            else if (method_name != "Quadrature")
                r.problem("method: must be Quadrature or AnalyticLimit");
            if (m_max < 0)
                r.problem("m_max: must be nonnegative");
            if (n_max < 0)
                r.problem("n_max: must be nonnegative");
            if (profile.kind == ProfileKind::KappaTildeStep2 && m_max < 1)
                r.problem("m_max: step-two tables need m_max >= 1");
            if (profile.kind == ProfileKind::KappaTildeStep2 && method == CouplingMethod::AnalyticLimit)
                r.problem("method: step-two tables are computed by quadrature");
            r.finish();

            ScenarioOutcome outcome;
            outcome.resolved = {{"profile", to_string(profile.kind)},
                                {"a", profile.a},
                                {"m_max", m_max},
                                {"n_max", n_max},
                                {"method", to_string(method)},
                                {"index_convention", CouplingTable::index_convention}};
            const auto table = build_coupling_table(profile, m_max, n_max, method, jobs);
            double max_off = 0.0;
            for (const auto& [key, v] : table.entries())
            {
                const auto& [m, row, col] = key;
                if (row > 0 && (profile.kind == ProfileKind::KappaTildeStep2 || col == 0))
                    max_off = std::max(max_off, std::abs(v));
            }
            outcome.summary = {{"entries", table.entries().size()}, {"max_abs_residual_coupling", max_off}};
            if (cfg.wants("csv"))
                dir.write("couplings.csv", [&](std::ostream& out) { table.write_csv(out); });
            return outcome;
        }

        inline ScenarioOutcome run_stirap(const ScenarioConfig& cfg, OutputDir& dir)
        {
            ParamReader r(cfg, schema_for("stirap"));
            const bool raw = r.has("Omega_MHz") || r.has("g_MHz") || r.has("delta_MHz") || r.has("gamma_MHz") ||
                             r.has("T_us");
            const bool grouped = r.has("Omega_T") || r.has("g_T") || r.has("delta_T") || r.has("gamma_T");
            if (raw && grouped)
                r.problem("Omega_T/g_T/delta_T/gamma_T: cannot be mixed with *_MHz or T_us inputs");
            double T = 1.0, scale = 1.0;
            std::string suffix = "_T";
            if (raw)
            {
                T = r.number("T_us", 0.0);
                if (!(T > 0.0))
                    r.problem("T_us: required positive number with MHz inputs");
                scale = 2.0 * pi;
                suffix = "_MHz";
            }
            auto value = [&](const std::string& name, bool required) {
                const auto v = r.number(name + suffix);
                if (!v && required)
                    r.problem(name + suffix + ": required key missing");
                return v.value_or(0.0) * scale;
            };
            const double Omega = value("Omega", true);
            const double g = value("g", true);
            const double delta = value("delta", false);
            const double gamma = value("gamma", false);
            const double a = r.number("a", 0.0);
            const int m = r.integer("m", 0);
            const int n_max = r.integer("n_max", 5);
            const int cycles = r.integer("cycles", 1);
            const double tau1 = r.number("tau1", 6.0);
            const int points = r.integer("points_per_step", 241);
            const bool convergence = r.boolean("convergence_report", false);
            auto scan_omega = r.list<double>("scan_Omega");
            auto scan_a = r.list<double>("scan_a");
            if (!(a > 0.0))
                r.problem("a: must be positive");
            if (!(Omega > 0.0))
                r.problem("Omega" + suffix + ": must be positive");
            if (!(g > 0.0))
                r.problem("g" + suffix + ": must be positive");
            if (gamma < 0.0)
                r.problem("gamma" + suffix + ": must be nonnegative");
            if (m < 0)
                r.problem("m: must be nonnegative");
            if (n_max < 0)
                r.problem("n_max: must be nonnegative");
            if (cycles < 1)
                r.problem("cycles: must be >= 1");
            if (!(tau1 > 0.0))
                r.problem("tau1: must be positive");
            if (points < 2)
                r.problem("points_per_step: must be >= 2");
            for (double v : scan_a)
                if (!(v > 0.0))
                {
                    r.problem("scan_a: entries must be positive");
                    break;
                }
            for (double v : scan_omega)
                if (!(v > 0.0))
                {
                    r.problem("scan_Omega: entries must be positive");
                    break;
                }
            if (!scan_a.empty() && scan_omega.empty())
                r.problem("scan_a: requires scan_Omega");
            r.finish();

            ScenarioOutcome outcome;
            outcome.resolved = {{"Omega_T", Omega * T}, {"g_T", g * T},  {"delta_T", delta * T},
                                {"gamma_T", gamma * T}, {"T", T},        {"time_unit", raw ? "us" : "T"},
                                {"a", a},               {"m", m},        {"n_max", n_max},
                                {"cycles", cycles},     {"tau1", tau1},  {"points_per_step", points}};
            if (raw)
                outcome.resolved["angular_frequency_unit"] = "rad/us";

            const auto params = StirapParams::uniform(g, m, n_max, a, delta, gamma, cycles);
            PulseSchedule s1{Omega, T, tau1, Step::One, SpatialProfile::step1(a)};
            PulseSchedule s2{Omega, T, tau1, Step::Two, SpatialProfile::step2()};
            FluxInsertionOptions opt;
            opt.points_per_step = static_cast<std::size_t>(points);
            opt.convergence_report = convergence;
            const auto result = run_flux_insertion(params, s1, s2, cycles, opt);
            outcome.summary = {{"transfer_at_t1", result.transfer_at_t1},
                               {"efficiency", result.efficiency},
                               {"final_efficiency", result.efficiency.back()},
                               {"max_norm_drift", result.trace.max_norm_drift()},
                               {"ode_accepted_steps", result.trace.stats.accepted},
                               {"ode_rejected_steps", result.trace.stats.rejected}};
            if (result.convergence)
                outcome.summary["convergence"] = {{"n_max", result.convergence->n_max},
                                                  {"n_max_reference", result.convergence->n_max_reference},
                                                  {"max_cavity_deviation", result.convergence->max_cavity_deviation}};
            if (cfg.wants("csv"))
                dir.write("trace.csv", [&](std::ostream& out) { result.trace.write_csv(out); });

            if (!scan_omega.empty())
            {
                if (scan_a.empty())
                    scan_a = {a};
                std::vector<std::vector<CsvCell>> rows;
                Json scan = Json::array();
                for (double av : scan_a)
                {
                    std::vector<double> values;
                    for (double ov : scan_omega)
                    {
                        const auto p = StirapParams::uniform(g, m, n_max, av, delta, gamma, 1);
                        PulseSchedule s{ov * scale, T, tau1, Step::One, SpatialProfile::step1(av)};
                        const double v = step1_transfer(p, s);
                        values.push_back(v);
                        rows.push_back({av, ov * scale * T, v});
                    }
                    scan.push_back({{"a", av}, {"transfer_at_t1", values}});
                }
                outcome.summary["scan"] = {{"Omega_T", [&] {
                                                std::vector<double> o;
                                                for (double ov : scan_omega)
                                                    o.push_back(ov * scale * T);
                                                return o;
                                            }()},
                                           {"series", scan}};
                if (cfg.wants("csv"))
                    dir.write("scan.csv", [&](std::ostream& out) {
                        CsvWriter csv(out, {"a", "Omega_T", "transfer_at_t1"});
                        for (const auto& row : rows)
                            csv.row(row);
                    });
            }
            return outcome;
        }

        inline ScenarioOutcome run_losses(const ScenarioConfig& cfg, OutputDir& dir, unsigned jobs)
        {
            ParamReader r(cfg, schema_for("losses"));
            LossParams base;
            base.gamma_T = r.number("gamma_T", 0.0);
            base.a = r.number("a", base.a);
            base.xi = r.number("xi", base.xi);
            base.tau1 = r.number("tau1", base.tau1);
            const auto omega = r.grid("Omega_T");
            const auto g = r.grid("g_T");
            if (!(base.gamma_T >= 0.0))
                r.problem("gamma_T: must be nonnegative");
            if (!(base.a > 0.0))
                r.problem("a: must be positive");
            if (!(base.xi > 0.0))
                r.problem("xi: must be positive");
            if (r.has("Omega_T") && (omega.empty() || *std::min_element(omega.begin(), omega.end()) <= 0.0))
                r.problem("Omega_T: grid must be nonempty and positive");
            if (r.has("g_T") && (g.empty() || *std::min_element(g.begin(), g.end()) <= 0.0))
                r.problem("g_T: grid must be nonempty and positive");
            r.finish();

            ScenarioOutcome outcome;
            outcome.resolved = {{"gamma_T", base.gamma_T}, {"a", base.a},   {"xi", base.xi},
                                {"tau1", base.tau1},       {"Omega_T", omega}, {"g_T", g},
                                {"density", "gaussian exp(-x^2/xi^2)"}};
            const auto surface = fidelity_surface(base, omega, g, jobs);
            double f_min = 1.0, f_max = 0.0;
            Json rows = Json::array();
            for (std::size_t i = 0; i < omega.size(); ++i)
            {
                std::size_t best = 0;
                for (std::size_t j = 0; j < g.size(); ++j)
                {
                    const double F = surface[i * g.size() + j].value.F;
                    f_min = std::min(f_min, F);
                    f_max = std::max(f_max, F);
                    if (F > surface[i * g.size() + best].value.F)
                        best = j;
                }
                rows.push_back({{"Omega_T", omega[i]},
                                {"best_g_T", g[best]},
                                {"best_F", surface[i * g.size() + best].value.F},
                                {"interior_maximum", best > 0 && best + 1 < g.size()}});
            }
            outcome.summary = {{"F_min", f_min}, {"F_max", f_max}, {"rows", rows}};
            if (cfg.wants("csv"))
                dir.write("surface.csv", [&](std::ostream& out) { write_surface_csv(out, surface); });
            return outcome;
        }

        inline ScenarioOutcome run_fqh_report(const ScenarioConfig& cfg, OutputDir& dir, unsigned jobs)
        {
            ParamReader r(cfg, schema_for("fqh-report"));
            const int N_max = r.integer("N_max", 3);
            const double V0 = r.number("V0", 1.0);
            const auto m_max = r.integer("m_max");
            SpectrumOptions opt;
            opt.jobs = jobs;
            opt.dense_limit = static_cast<std::size_t>(std::max(1, r.integer("dense_limit", 2000)));
            std::vector<std::pair<int, int>> sectors;
            if (r.has("sectors"))
            {
                const auto& s = cfg.parameters["sectors"];
                bool ok = s.is_array();
                if (ok)
                    for (const auto& e : s)
                        ok = ok && e.is_array() && e.size() == 2 && e[0].is_number_integer() &&
                             e[1].is_number_integer() && e[0].get<int>() >= 1 && e[1].get<int>() >= 0;
                if (!ok)
                    r.problem("sectors: expected an array of [N, L] integer pairs with N >= 1, L >= 0");
                else
                    for (const auto& e : s)
                        sectors.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
            if (N_max < 1 || N_max > max_expansion_photons)
                r.problem("N_max: must lie in [1, " + std::to_string(max_expansion_photons) + "]");
            if (!(V0 > 0.0))
                r.problem("V0: must be positive");
            if (m_max && *m_max < 0)
                r.problem("m_max: must be nonnegative");
            r.finish();

            ScenarioOutcome outcome;
            outcome.resolved = {{"N_max", N_max}, {"V0", V0}, {"dense_limit", opt.dense_limit}};
            if (m_max)
                outcome.resolved["m_max"] = *m_max;

            struct Row
            {
                int N, L;
                SectorSpectrum spec;
                std::optional<double> laughlin, quasihole1, quasihole2;
            };
            std::vector<std::pair<int, int>> todo;
            for (int N = 1; N <= N_max; ++N)
                for (int m : {0, 1, 2})
                    todo.emplace_back(N, quasihole_angular_momentum(N, m));
            for (const auto& s : sectors)
                if (std::find(todo.begin(), todo.end(), s) == todo.end())
                    todo.push_back(s);

            std::vector<Row> rows;
            for (const auto& [N, L] : todo)
            {
                const auto basis = lll_sector_basis(N, L, m_max);
                Row row{N, L, sector_spectrum(basis, V0, opt), {}, {}, {}};
                auto proj = [&](int m) -> std::optional<double> {
                    if (N > max_expansion_photons || L != quasihole_angular_momentum(N, m))
                        return std::nullopt;
                    try
                    {
                        return projection_onto(row.spec, basis, polynomial_state(N, m));
                    }
                    catch (const std::out_of_range&)
                    {
                        return std::nullopt;
                    }
                };
                row.laughlin = proj(0);
                row.quasihole1 = proj(1);
                row.quasihole2 = proj(2);
                rows.push_back(row);
            }

            Json spectra = Json::array();
            for (const auto& row : rows)
            {
                Json j = {{"N", row.N},
                          {"L", row.L},
                          {"dimension", row.spec.dimension},
                          {"zero_modes", row.spec.zero_modes.cols()},
                          {"solver", row.spec.dense ? "dense" : "lanczos"}};
                j["gap"] = row.spec.gap ? Json(*row.spec.gap) : Json(nullptr);
                for (auto [name, v] : {std::pair{"laughlin_projection", row.laughlin},
                                       std::pair{"quasihole1_projection", row.quasihole1},
                                       std::pair{"quasihole2_projection", row.quasihole2}})
                    if (v)
                        j[name] = *v;
                spectra.push_back(j);
            }
            Json pumps = Json::array();
            for (int N = 0; N < N_max; ++N)
                pumps.push_back({{"N", N}, {"pump_overlap", pump_overlap(N)}});
            Json qh = Json::array();
            for (int N = 1; N <= N_max; ++N)
                for (int m : {0, 1, 2})
                    qh.push_back({{"N", N},
                                  {"m", m},
                                  {"L", quasihole_angular_momentum(N, m)},
                                  {"L_expectation", angular_momentum_expectation(polynomial_state(N, m))}});
            outcome.summary = {{"sectors", spectra}, {"pump_overlaps", pumps}, {"quasihole_angular_momentum", qh}};

            if (cfg.wants("csv"))
            {
                dir.write("sectors.csv", [&](std::ostream& out) {
                    CsvWriter csv(out, {"N", "L", "dimension", "zero_modes", "gap", "laughlin_projection"});
                    for (const auto& row : rows)
                        csv.row({static_cast<long long>(row.N), static_cast<long long>(row.L),
                                 static_cast<long long>(row.spec.dimension),
                                 static_cast<long long>(row.spec.zero_modes.cols()),
                                 row.spec.gap ? CsvCell(*row.spec.gap) : CsvCell(std::string()),
                                 row.laughlin ? CsvCell(*row.laughlin) : CsvCell(std::string())});
                });
                for (int N = 1; N <= N_max; ++N)
                    dir.write("laughlin_N" + std::to_string(N) + ".csv",
                              [&](std::ostream& out) { laughlin_state(N).write_csv(out); });
            }
            return outcome;
        }

        inline ScenarioOutcome run_grow(const ScenarioConfig& cfg, OutputDir& dir)
        {
            ParamReader r(cfg, schema_for("grow"));
            ProtocolConfig pc;
            pc.V0 = r.number("V0", 1.0);
            if (!(pc.V0 > 0.0))
                r.problem("V0: must be positive");
            auto energy = [&](const std::string& name, double fallback_ratio, double& target) {
                const bool has_ratio = r.has(name + "_over_V0"), has_raw = r.has(name);
                if (has_ratio && has_raw)
                    r.problem(name + ": give either " + name + "_over_V0 or " + name + ", not both");
                if (has_raw && !r.has("V0"))
                    r.problem(name + ": raw values require V0");
                target = has_raw ? r.number(name, 0.0) : r.number(name + "_over_V0", fallback_ratio) * pc.V0;
            };
            energy("Delta0", 10.0, pc.Delta0);
            energy("Omega_p", 0.05, pc.Omega_p);
            energy("g_a", 0.2, pc.g_a);
            energy("g_b", 0.2, pc.g_b);
            if (r.has("tau_f") && r.has("tau_f_V0"))
                r.problem("tau_f: give either tau_f_V0 or tau_f, not both");
            if (r.has("tau_f") && !r.has("V0"))
                r.problem("tau_f: raw values require V0");
            pc.tau_f = r.has("tau_f") ? r.number("tau_f", 0.0) : r.number("tau_f_V0", 5000.0) / pc.V0;
            pc.N_target = r.integer("N_target", 3);
            pc.Delta_LN = r.number("Delta_LN_over_V0", 0.2) * pc.V0;
            pc.validity_threshold = r.number("validity_threshold", pc.validity_threshold);
            pc.override_validity = r.boolean("override_validity", false);
            pc.ramp_fraction = r.number("ramp_fraction", 0.0);
            pc.dt = r.number("dt_V0", 1.0) / pc.V0;
            pc.sample_interval = r.number("sample_interval_V0", 10.0) / pc.V0;
            pc.krylov.tol = r.number("krylov_tol", pc.krylov.tol);
            pc.lll_modes = r.list<int>("lll_modes");
            pc.first_modes = r.list<int>("first_modes");
            pc.gamma_eff = r.number("gamma_eff_over_V0", 0.0) * pc.V0;
            pc.Lambda_N = r.list<double>("Lambda_N");
            if (pc.N_target > max_expansion_photons)
                r.problem("N_target: at most " + std::to_string(max_expansion_photons));
            if (!(pc.krylov.tol > 0.0))
                r.problem("krylov_tol: must be positive");
            if (r.problems().empty())
            {
                try
                {
                    pc.validate();
                }
                catch (const std::invalid_argument& e)
                {
                    r.problem(e.what());
                }
            }
            if (r.problems().empty() && !pc.override_validity && !pc.valid())
                for (const auto& f : pc.validity())
                    if (!f.satisfied)
                        r.problem(f.name + ": ratio " + format_double(f.ratio) + " exceeds validity_threshold; set "
                                  "override_validity to run anyway");
            r.finish();

            const GrowingModel model(pc);
            Json flags = Json::array();
            for (const auto& f : pc.validity())
                flags.push_back({{"name", f.name}, {"ratio", f.ratio}, {"satisfied", f.satisfied}});
            ScenarioOutcome outcome;
            outcome.resolved = {{"V0", pc.V0},
                                {"Delta0", pc.Delta0},
                                {"Omega_p", pc.Omega_p},
                                {"g_a", pc.g_a},
                                {"g_b", pc.g_b},
                                {"tau_f", pc.tau_f},
                                {"Delta0_over_V0", pc.Delta0 / pc.V0},
                                {"Omega_p_over_V0", pc.Omega_p / pc.V0},
                                {"g_a_over_V0", pc.g_a / pc.V0},
                                {"g_b_over_V0", pc.g_b / pc.V0},
                                {"tau_f_V0", pc.tau_f * pc.V0},
                                {"N_target", pc.N_target},
                                {"Delta_LN", pc.Delta_LN},
                                {"validity_threshold", pc.validity_threshold},
                                {"override_validity", pc.override_validity},
                                {"ramp_fraction", pc.ramp_fraction},
                                {"dt", pc.dt},
                                {"sample_interval", pc.sample_interval},
                                {"krylov_tol", pc.krylov.tol},
                                {"lll_modes", pc.resolved_lll_modes()},
                                {"first_modes", pc.resolved_first_modes()},
                                {"basis_dimension", model.basis().dimension()},
                                {"gamma_eff", pc.gamma_eff},
                                {"Lambda_N", pc.Lambda_N}};

            const auto trace = run_growing_protocol(model);
            const auto& psi = trace.final_state();
            Json stages = Json::array();
            for (const auto& s : trace.stages)
            {
                const bool pump = s.name.rfind("pump", 0) == 0;
                Json j = {{"name", s.name}, {"photons", s.photons}, {"t_start", s.t_start}, {"t_end", s.t_end},
                          {"duration", s.duration}};
                if (pump)
                {
                    j["pre_overlap"] = s.reference;
                    j["post_target_population"] = s.target;
                }
                else
                {
                    j["target_L"] = static_cast<int>(s.target);
                    j["target_sector_population"] = s.reference;
                }
                stages.push_back(j);
            }
            Json summary;
            const std::string final_key = "p_LN" + std::to_string(pc.N_target);
            if (pc.N_target == 1)
                summary["final_p_LN1"] = trace.final_value("p_0");
            else
                summary["final_" + final_key] = trace.final_value(final_key);
            summary["final_mean_L"] = trace.final_value("mean_L");
            summary["final_mean_N"] = trace.final_value("mean_N");
            summary["final_norm"] = psi.norm();
            summary["final_interaction_energy"] = model.hint().expectation(psi) / psi.squaredNorm();
            summary["target_L"] = quasihole_angular_momentum(pc.N_target, 0);
            summary["validity_flags"] = flags;
            summary["stages"] = stages;
            summary["warnings"] = trace.warnings;
            summary["work"] = stats_json(trace.stats);
            if (pc.gamma_eff > 0.0 && !pc.Lambda_N.empty())
            {
                Json scaling = Json::array();
                for (std::size_t i = 0; i < pc.Lambda_N.size(); ++i)
                {
                    const int N = static_cast<int>(i) + 1;
                    const double lam = pc.Lambda_N[i];
                    Json j = {{"N", N}, {"Lambda_N", lam}};
                    if (lam > 0.0)
                    {
                        const double tau = optimal_tau(N, pc.gamma_eff, pc.Delta_LN, lam);
                        j["optimal_tau"] = tau;
                        j["fidelity_at_optimum"] = fidelity_scaling(N, pc.gamma_eff, tau, pc.Delta_LN, lam);
                    }
                    j["fidelity_at_tau_f"] = fidelity_scaling(N, pc.gamma_eff, pc.tau_f, pc.Delta_LN, lam);
                    scaling.push_back(j);
                }
                summary["fidelity_scaling"] = scaling;
            }
            outcome.summary = summary;
            if (cfg.wants("csv"))
                dir.write("trace.csv", [&](std::ostream& out) { trace.write_csv(out); });
            return outcome;
        }
    } // namespace detail

    /// Runs one scenario, writing its artifacts plus manifest.json into `out_dir`.
    inline ScenarioOutcome run_scenario(const ScenarioConfig& cfg, const std::string& out_dir, unsigned jobs = 1)
    {
        if (out_dir.empty())
            throw ConfigError({"output: no output directory given (set \"output\" or pass --out)"});
        std::vector<std::string> files;
        detail::OutputDir dir(out_dir, files);
        ScenarioOutcome outcome;
        if (cfg.scenario == "couplings")
            outcome = detail::run_couplings(cfg, dir, jobs);
        else if (cfg.scenario == "stirap")
            outcome = detail::run_stirap(cfg, dir);
        else if (cfg.scenario == "losses")
            outcome = detail::run_losses(cfg, dir, jobs);
        else if (cfg.scenario == "fqh-report")
            outcome = detail::run_fqh_report(cfg, dir, jobs);
        else if (cfg.scenario == "grow")
            outcome = detail::run_grow(cfg, dir);
        else
            throw ConfigError({"scenario: unknown value '" + cfg.scenario + "'"});
        if (cfg.wants("json"))
            dir.write_json("summary.json", outcome.summary);
        outcome.files = files;
        outcome.files.push_back("manifest.json");
        Json formats = Json::array();
        for (const auto& f : cfg.formats)
            formats.push_back(f);
        Json manifest = {{"code_version", code_version},
                         {"scenario", cfg.scenario},
                         {"config", cfg.source},
                         {"resolved", outcome.resolved},
                         {"formats", formats},
                         {"files", outcome.files}};
        std::vector<std::string> ignored;
        detail::OutputDir(out_dir, ignored).write_json("manifest.json", manifest);
        return outcome;
    }
} // namespace fluxgrow
