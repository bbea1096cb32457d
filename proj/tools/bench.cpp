// Timing comparison of the OpenMP kernels against the serial reference on the
// heat model: forward ensemble, first variation and the backward sweep.

#include <chrono>
#include <cstdio>

#include "dsmp/absde.hpp"
#include "dsmp/exec.hpp"
#include "dsmp/smp.hpp"
#include "dsmp/variation.hpp"

using namespace dsmp;

namespace {

template <typename F>
double timed(F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int paths = 2000;
    int modes = 16;
    if (argc > 1) paths = std::atoi(argv[1]);
    if (argc > 2) modes = std::atoi(argv[2]);

    OperatorSpec op{OperatorKind::heat_dirichlet, modes};
    CoefficientSpec co;
    co.f = {0.0, -0.5, 1.0, 0.0, 1.0};
    co.l = {1.0, 0.5};
    co.h = {2.0, 0.0};
    co.g = {0.25, 0.0, 0.0};
    TimeGrid grid = TimeGrid::make(0.01, 1.0, 0.25);
    Model model(op, co, grid, dirac_measure(-0.25, 0.0, -0.25));
    RegularMeasure mu_l = dirac_measure(-0.25, 0.0, 0.0);
    RegularMeasure mu_h = measure_sum(dirac_measure(0.75, 1.0, 1.0, 0.5),
                                      uniform_density_measure(0.75, 1.0, 0.5, 2 * grid.L + 1));

    NoiseEnsemble noise{12345, paths, grid.K, op.noise_dim(), grid.dt, 1};
    InitialHistory init{Vec(op.state_dim(), 0.0), {}};
    init.base[0] = 1.0;
    ControlProcess u = ControlProcess::constant(grid.K, op.control_dim(), 0.2, {-2.0, 2.0});

    std::printf("paths=%d modes=%d steps=%d threads=%d\n", paths, modes, grid.K,
                exec::max_threads());

    for (bool par : {false, true}) {
        exec::set_parallel(par);
        PathEnsemble ens;
        AdjointEnsemble adj;
        const double t_fwd = timed([&] { ens = simulate_paths(model, u, init, noise); });
        const double t_adj =
            timed([&] { adj = solve_absde(model, ens, u, mu_l, mu_h, noise, {}); });
        ControlDirection v;
        v.steps = grid.K;
        v.dim = op.control_dim();
        v.values.assign(static_cast<size_t>(grid.K) * v.dim, 0.3);
        PathEnsemble Y;
        const double t_var = timed([&] { Y = solve_first_variation(model, ens, u, v); });
        const double chk = cost(model, ens, u, mu_l, mu_h).value;
        std::printf("%-8s forward %8.3fs  variation %8.3fs  backward %8.3fs   (J=%.12f)\n",
                    par ? "openmp" : "serial", t_fwd, t_var, t_adj, chk);
    }
    return 0;
}
