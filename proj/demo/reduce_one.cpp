//
// Reduces one seeded random DSS_EXP model of order 64 to order 4 on the
// finite horizon tau = L * delta and prints the descent trace.
//
#include <iostream>

#include <dssmor/dssmor.hpp>

int main()
{
    using namespace dssmor;

    const DssExpParams params = random_stable_model(64, 7, 0.01);
    const DssModel full = exp_params_to_model(params);
    const Horizon h = Horizon::finite(2048 * 0.01);

    const InitializerChoice init = select_initializer(full, 4, h, 11);
    std::cout << "initializer: " << to_string(init.provenance);
    if (!init.bt_rejection.empty())
    {
        std::cout << " (balanced truncation rejected: " << init.bt_rejection
                  << ")";
    }
    std::cout << "\n";

    const ReductionResult res = reduce(full, init.init, h, ReducerConfig{});
    std::cout << trace_csv(res.trace);
    std::cout << "termination: " << to_string(res.termination) << "\n"
              << "||G||^2           = " << h2_norm_sq(full, h) << "\n"
              << "||G - G_r||^2 ini = "
              << error_h2_norm_sq(full, exp_params_to_model(init.init), h)
              << "\n"
              << "||G - G_r||^2 fin = " << error_h2_norm_sq(full, res.rom, h)
              << "\n";
    return 0;
}
