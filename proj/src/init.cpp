#include "pnpr/init.hpp"

#include "pnpr/metrics.hpp"
#include "pnpr/rng.hpp"

#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>

namespace pnpr {

void InitConfig::validate() const
{
    if (n_starts < 1)
        throw std::invalid_argument("init: n_starts must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("init: beta must lie in (0, 1]");
}

Image random_start(std::size_t n, const SpaceConstraints& constraints, std::uint64_t seed)
{
    Rng rng(seed);
    Image v(n, n);
    for (auto& p : v)
        p = cplx(rng.uniform(0.0, 255.0), 0.0);
    if (constraints.support_mask) {
        constraints.validate(v);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!(*constraints.support_mask)[i])
                v[i] = cplx{};
    }
    return v;
}

InitResult multistart_init(const MeasurementOperator& op, const Magnitudes& y, const InitConfig& cfg,
                           const SpaceConstraints& constraints, unsigned threads)
{
    cfg.validate();
    std::vector<Image> candidates(cfg.n_starts);
    InitResult result;
    result.residuals.assign(cfg.n_starts, 0.0);

    auto work = [&](std::size_t s) {
        Image v = random_start(op.n(), constraints, derive_seed(cfg.seed, s));
        if (cfg.warm_iters > 0)
            v = hio_run(op, y, v, HioConfig{cfg.beta, cfg.warm_iters}, constraints);
        result.residuals[s] = residual(op, v, y);
        candidates[s] = std::move(v);
    };

    if (threads <= 1 || cfg.n_starts == 1) {
        for (std::size_t s = 0; s < cfg.n_starts; ++s)
            work(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t s; (s = next.fetch_add(1)) < cfg.n_starts;) {
                    try {
                        work(s);
                    } catch (...) {
                        if (!failed.exchange(true))
                            failure = std::current_exception();
                    }
                }
            });
        for (auto& th : pool)
            th.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    std::size_t best = 0;
    for (std::size_t s = 1; s < cfg.n_starts; ++s)
        if (result.residuals[s] < result.residuals[best])
            best = s;
    result.best_start = best;
    result.image = std::move(candidates[best]);
    if (cfg.refine_iters > 0)
        result.image = hio_run(op, y, result.image, HioConfig{cfg.beta, cfg.refine_iters}, constraints);
    return result;
}

} // namespace pnpr
