// Grows the two-photon Laughlin state step by step and prints the stage record.

#include <cstdio>

#include "fluxgrow/growing.hpp"

int main()
{
    fluxgrow::ProtocolConfig cfg;
    cfg.N_target = 2;
    cfg.tau_f = 2000.0;
    cfg.override_validity = true;
    const fluxgrow::GrowingModel model(cfg);

    auto psi = model.vacuum();
    auto pump = fluxgrow::pump_pulse(model, psi, 0);
    psi = pump.final_state();
    std::printf("pump1: |<1 photon in l=0|psi>|^2 = %.6f\n", pump.stages.back().target);

    for (const char* label : {"sweep1a", "sweep1b"})
    {
        auto sweep = fluxgrow::flux_sweep(model, psi, 0.0, label);
        psi = sweep.final_state();
        std::printf("%s: weight in L = %.0f sector = %.6f\n", label, sweep.stages.back().target,
                    sweep.stages.back().reference);
    }

    auto refill = fluxgrow::pump_pulse(model, psi, 1);
    psi = refill.final_state();
    std::printf("pump2: |<LN,2|psi>|^2 = %.6f, <L> = %.4f, <H_int> = %.2e\n", refill.stages.back().target,
                model.mean(model.angular_momentum(), psi), model.mean(model.hint(), psi));
}
