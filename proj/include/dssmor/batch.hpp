///
/// \file batch.hpp
///
/// Ensemble drivers behind the command-line tool: horizon selection, reduction
/// of every model in a bank, method comparison, and gradient checks. Models
/// are processed by a pool of workers; results are merged by model index so
/// output does not depend on the worker count.
///
#ifndef DSSMOR_BATCH_HPP
#define DSSMOR_BATCH_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <dssmor/baselines.hpp>
#include <dssmor/gradients.hpp>
#include <dssmor/io.hpp>
#include <dssmor/reducer.hpp>

namespace dssmor
{

//------------------------------------------------------------------------------
// Horizon selection
//------------------------------------------------------------------------------

///
/// ### HorizonSpec
///
/// `inf`, `Ldt` (alias `L*delta`), `L`, `10L`, or an explicit number of
/// seconds. `L` and `10L` use the sample count itself as the horizon in
/// seconds, independent of the sampling time.
///
struct HorizonSpec
{
    enum class Kind
    {
        infinite,
        l_delta,
        l,
        ten_l,
        seconds,
    };

    Kind kind = Kind::infinite;
    double seconds = 0.0;

    static HorizonSpec parse(const std::string& text)
    {
        HorizonSpec s;
        if (text == "inf")
        {
            s.kind = Kind::infinite;
        }
        else if (text == "Ldt" || text == "L*delta")
        {
            s.kind = Kind::l_delta;
        }
        else if (text == "L")
        {
            s.kind = Kind::l;
        }
        else if (text == "10L")
        {
            s.kind = Kind::ten_l;
        }
        else
        {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(text, &used);
            }
            catch (const std::logic_error&)
            {
                used = 0;
            }
            if (used != text.size() || !(v > 0.0) || !std::isfinite(v))
            {
                throw Error(ErrorKind::configuration,
                            "horizon must be inf, Ldt, L, 10L or a positive "
                            "number, got '" + text + "'");
            }
            s.kind = Kind::seconds;
            s.seconds = v;
        }
        return s;
    }

    Horizon resolve(long sequence_length, double delta) const
    {
        switch (kind)
        {
            case Kind::infinite:
                return Horizon::infinite();
            case Kind::l_delta:
                return Horizon::finite(static_cast<double>(sequence_length) *
                                       delta);
            case Kind::l:
                return Horizon::finite(static_cast<double>(sequence_length));
            case Kind::ten_l:
                return Horizon::finite(10.0 *
                                       static_cast<double>(sequence_length));
            case Kind::seconds:
                return Horizon::finite(seconds);
        }
        return Horizon::infinite();
    }

    std::string label() const
    {
        switch (kind)
        {
            case Kind::infinite:
                return "inf";
            case Kind::l_delta:
                return "Ldt";
            case Kind::l:
                return "L";
            case Kind::ten_l:
                return "10L";
            case Kind::seconds:
                return format_double(seconds);
        }
        return "?";
    }
};

enum class Method
{
    ibt,
    fbt,
    ih2,
    fh2,
};

inline const char* to_string(Method m)
{
    switch (m)
    {
        case Method::ibt:
            return "ibt";
        case Method::fbt:
            return "fbt";
        case Method::ih2:
            return "ih2";
        case Method::fh2:
            return "fh2";
    }
    return "?";
}

inline Method parse_method(const std::string& s)
{
    if (s == "ibt") return Method::ibt;
    if (s == "fbt") return Method::fbt;
    if (s == "ih2") return Method::ih2;
    if (s == "fh2") return Method::fh2;
    throw Error(ErrorKind::configuration, "unknown method '" + s + "'");
}

inline bool is_infinite_method(Method m)
{
    return m == Method::ibt || m == Method::ih2;
}

inline bool is_optimizing(Method m)
{
    return m == Method::ih2 || m == Method::fh2;
}

/// Horizon a method works on: always infinite for ibt/ih2.
inline HorizonSpec method_horizon(Method m, const HorizonSpec& requested)
{
    if (is_infinite_method(m))
    {
        return HorizonSpec{};
    }
    if (requested.kind == HorizonSpec::Kind::infinite)
    {
        throw Error(ErrorKind::configuration,
                    std::string(to_string(m)) + " needs a finite horizon");
    }
    return requested;
}

//------------------------------------------------------------------------------
// Worker pool
//------------------------------------------------------------------------------

/// Default worker count from `DSSMOR_WORKERS`, else 1.
inline int default_workers()
{
    if (const char* env = std::getenv("DSSMOR_WORKERS"))
    {
        try
        {
            const int n = std::stoi(env);
            if (n >= 1)
            {
                return n;
            }
        }
        catch (const std::logic_error&)
        {
        }
    }
    return 1;
}

/// Runs `fn(i)` for `i < count` on up to `workers` threads.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn)
{
    const std::size_t threads = std::min<std::size_t>(
        count, static_cast<std::size_t>(std::max(workers, 1)));
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
    {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
            {
                fn(i);
            }
        });
    }
    for (auto& th : pool)
    {
        th.join();
    }
}

//------------------------------------------------------------------------------
// Ensemble reduction
//------------------------------------------------------------------------------

struct BatchJob
{
    Eigen::Index r = 2;
    Method method = Method::fh2;
    HorizonSpec horizon{HorizonSpec::Kind::l_delta, 0.0};
    long sequence_length = 2048;
    ReducerConfig config;
    int workers = 1;
    std::uint64_t seed = 0;
};

struct ModelOutcome
{
    std::size_t index = 0;
    std::string status = "ok"; // ok | error
    std::string error;
    double tau = 0.0; // +inf for the infinite horizon
    Provenance provenance = Provenance::random;
    bool bt_stable = false;
    std::string bt_rejection;
    double f_init = 0.0;
    double f_final = 0.0;
    int iterations = 0;
    std::string termination = "none";
    double err_before = 0.0;
    double err_after = 0.0;
    ReductionTrace trace;
    std::optional<DssExpParams> rom;
};

/// Seed of the random fallback initializer for model `index` at order `r`.
inline std::uint64_t fallback_seed(std::uint64_t base, std::size_t index,
                                   Eigen::Index r)
{
    return derive_seed(base, index, static_cast<std::uint64_t>(r));
}

inline ModelOutcome reduce_one(const DssExpParams& params, std::size_t index,
                               const BatchJob& job)
{
    ModelOutcome o;
    o.index = index;
    try
    {
        const DssModel full = exp_params_to_model(params);
        const Horizon h = method_horizon(job.method, job.horizon)
                              .resolve(job.sequence_length, params.delta);
        o.tau = h.tau();
        const InitializerChoice init = select_initializer(
            full, job.r, h, fallback_seed(job.seed, index, job.r));
        o.provenance = init.provenance;
        o.bt_stable = init.bt_stable;
        o.bt_rejection = init.bt_rejection;
        const DssModel init_model = exp_params_to_model(init.init);
        o.err_before = error_h2_norm_sq(full, init_model, h);
        if (is_optimizing(job.method))
        {
            ReductionResult res = reduce(full, init.init, h, job.config);
            o.f_init = res.trace.initial_f();
            o.f_final = res.trace.final_f();
            o.iterations = res.trace.iterations();
            o.termination = to_string(res.termination);
            o.err_after = error_h2_norm_sq(full, res.rom, h);
            o.trace = std::move(res.trace);
            o.rom = res.rom_params ? std::move(res.rom_params)
                                   : std::optional<DssExpParams>(
                                         model_to_exp_params(res.rom));
        }
        else
        {
            o.f_init = o.f_final = objective_f(full, init_model, h).f;
            o.err_after = o.err_before;
            o.rom = init.init;
        }
    }
    catch (const std::exception& e)
    {
        o.status = "error";
        o.error = e.what();
    }
    return o;
}

inline std::vector<ModelOutcome> reduce_bank(const ModelBank& bank,
                                             const BatchJob& job)
{
    job.config.validate();
    method_horizon(job.method, job.horizon);
    std::vector<ModelOutcome> out(bank.models.size());
    parallel_for(bank.models.size(), job.workers, [&](std::size_t i) {
        out[i] = reduce_one(bank.models[i], i, job);
    });
    return out;
}

inline std::string reduce_report_csv(const std::vector<ModelOutcome>& rows)
{
    std::string out = "model,status,tau,provenance,bt_stable,bt_rejection,"
                      "f_init,f_final,iterations,termination,err_h2_before,"
                      "err_h2_after\n";
    for (const ModelOutcome& o : rows)
    {
        out += std::to_string(o.index) + ',' + o.status + ',' +
               format_double(o.tau) + ',' + to_string(o.provenance) + ',' +
               (o.bt_stable ? "1" : "0") + ',' + o.bt_rejection + ',' +
               format_double(o.f_init) + ',' + format_double(o.f_final) + ',' +
               std::to_string(o.iterations) + ',' + o.termination + ',' +
               format_double(o.err_before) + ',' + format_double(o.err_after) +
               '\n';
    }
    return out;
}

///
/// Mean and population standard deviation of `f_k` across the ensemble for
/// each iteration `k`. A model that stopped early contributes its final value
/// to later iterations.
///
inline std::string convergence_csv(const std::vector<ModelOutcome>& rows)
{
    std::size_t longest = 0;
    for (const ModelOutcome& o : rows)
    {
        longest = std::max(longest, o.trace.rows.size());
    }
    std::string out = "k,mean_f,std_f,count\n";
    for (std::size_t k = 0; k < longest; ++k)
    {
        double sum = 0.0;
        double sum_sq = 0.0;
        std::size_t n = 0;
        for (const ModelOutcome& o : rows)
        {
            if (o.trace.rows.empty())
            {
                continue;
            }
            const double f =
                o.trace.rows[std::min(k, o.trace.rows.size() - 1)].f;
            sum += f;
            sum_sq += f * f;
            ++n;
        }
        const double mean = sum / static_cast<double>(n);
        const double var =
            std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        out += std::to_string(k) + ',' + format_double(mean) + ',' +
               format_double(std::sqrt(var)) + ',' + std::to_string(n) + '\n';
    }
    return out;
}

//------------------------------------------------------------------------------
// Method comparison
//------------------------------------------------------------------------------

struct CompareRow
{
    std::size_t model = 0;
    Method method = Method::ibt;
    std::string horizon;
    ModelOutcome outcome;
    double hankel_tail = 0.0;
    double wall_ms = 0.0;
};

///
/// One row per (model, method, horizon). Infinite-horizon methods produce a
/// single `inf` row per model regardless of the requested horizons.
///
inline std::vector<CompareRow> compare_bank(
    const ModelBank& bank, Eigen::Index r,
    const std::vector<HorizonSpec>& horizons,
    const std::vector<Method>& methods, const BatchJob& base)
{
    struct Task
    {
        std::size_t model;
        Method method;
        HorizonSpec horizon;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < bank.models.size(); ++i)
    {
        for (const Method m : methods)
        {
            if (is_infinite_method(m))
            {
                tasks.push_back({i, m, HorizonSpec{}});
                continue;
            }
            for (const HorizonSpec& h : horizons)
            {
                if (h.kind != HorizonSpec::Kind::infinite)
                {
                    tasks.push_back({i, m, h});
                }
            }
        }
    }
    std::vector<CompareRow> rows(tasks.size());
    parallel_for(tasks.size(), base.workers, [&](std::size_t t) {
        const Task& task = tasks[t];
        BatchJob job = base;
        job.r = r;
        job.method = task.method;
        job.horizon = task.horizon;
        const auto start = std::chrono::steady_clock::now();
        CompareRow row;
        row.model = task.model;
        row.method = task.method;
        row.horizon = task.horizon.label();
        row.outcome = reduce_one(bank.models[task.model], task.model, job);
        try
        {
            const DssModel full = exp_params_to_model(bank.models[task.model]);
            const Horizon h = task.horizon.resolve(
                job.sequence_length, bank.models[task.model].delta);
            const RVector sv = hankel_singular_values(full, h);
            row.hankel_tail = r < sv.size() ? sv.tail(sv.size() - r).sum() : 0.0;
        }
        catch (const Error&)
        {
            row.hankel_tail = std::numeric_limits<double>::quiet_NaN();
        }
        const auto stop = std::chrono::steady_clock::now();
        row.wall_ms =
            std::chrono::duration<double, std::milli>(stop - start).count();
        rows[t] = std::move(row);
    });
    return rows;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows)
{
    std::string out = "model,method,horizon,tau,provenance,bt_stable,status,"
                      "err_before,err_after,hankel_tail,iterations,"
                      "termination\n";
    for (const CompareRow& row : rows)
    {
        const ModelOutcome& o = row.outcome;
        std::string status = o.status;
        if (status == "ok" && o.provenance == Provenance::random)
        {
            status = "unstable-init";
        }
        out += std::to_string(row.model) + ',' + to_string(row.method) + ',' +
               row.horizon + ',' + format_double(o.tau) + ',' +
               to_string(o.provenance) + ',' + (o.bt_stable ? "1" : "0") + ',' +
               status + ',' + format_double(o.err_before) + ',' +
               format_double(o.err_after) + ',' +
               format_double(row.hankel_tail) + ',' +
               std::to_string(o.iterations) + ',' + o.termination + '\n';
    }
    return out;
}

inline std::string compare_timing_csv(const std::vector<CompareRow>& rows)
{
    std::string out = "model,method,horizon,wall_ms\n";
    for (const CompareRow& row : rows)
    {
        out += std::to_string(row.model) + ',' + to_string(row.method) + ',' +
               row.horizon + ',' + format_double(row.wall_ms) + '\n';
    }
    return out;
}

//------------------------------------------------------------------------------
// Gradient check
//------------------------------------------------------------------------------

struct GradcheckRow
{
    std::size_t trial = 0;
    std::size_t model = 0;
    double tau = 0.0;
    GradientComparison comparison;
    std::string error;
};

///
/// For each trial, draws a random stable reduced model of order `r` and
/// compares the analytic gradients (raw and exponential) against central
/// differences. `corrupt` scales the analytic `lambda` gradient by `1 + 1e-3`
/// as a negative control.
///
inline std::vector<GradcheckRow> gradcheck_bank(const ModelBank& bank,
                                                Eigen::Index r,
                                                const HorizonSpec& horizon,
                                                long sequence_length,
                                                std::size_t trials,
                                                std::uint64_t seed,
                                                int workers,
                                                bool corrupt = false)
{
    if (trials < 1)
    {
        throw Error(ErrorKind::configuration, "gradcheck needs trials >= 1");
    }
    if (bank.models.empty())
    {
        throw Error(ErrorKind::configuration, "gradcheck needs a non-empty bank");
    }
    std::vector<GradcheckRow> rows(trials);
    parallel_for(trials, workers, [&](std::size_t t) {
        GradcheckRow row;
        row.trial = t;
        row.model = t % bank.models.size();
        try
        {
            const DssExpParams& params = bank.models[row.model];
            const DssModel full = exp_params_to_model(params);
            const Horizon h = horizon.resolve(sequence_length, params.delta);
            row.tau = h.tau();
            const DssExpParams rom_params = random_stable_model(
                r, derive_seed(seed, t, static_cast<std::uint64_t>(r)),
                params.delta);
            const DssModel rom = exp_params_to_model(rom_params);
            GradientSet analytic = analytic_gradients(full, rom, h);
            if (corrupt)
            {
                analytic.grad_lambda *= 1.0 + 1e-3;
            }
            const GradientSet fd = fd_gradient_oracle(full, rom, h);
            row.comparison = compare_gradients(analytic, fd);
            const GradientSet chained = exp_chain_rule(analytic, rom_params);
            compare_exp_gradients(row.comparison, *chained.exp,
                                  fd_exp_gradient_oracle(full, rom_params, h));
        }
        catch (const std::exception& e)
        {
            row.error = e.what();
            row.comparison.re_lambda = std::numeric_limits<double>::infinity();
        }
        rows[t] = std::move(row);
    });
    return rows;
}

inline std::string gradcheck_csv(const std::vector<GradcheckRow>& rows)
{
    std::string out = "trial,model,tau,re_lambda,im_lambda,re_b,im_b,re_c,im_c,"
                      "exp_lambda_re,exp_lambda_im,exp_w_re,exp_w_im,pass\n";
    const auto opt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    for (const GradcheckRow& row : rows)
    {
        const GradientComparison& c = row.comparison;
        out += std::to_string(row.trial) + ',' + std::to_string(row.model) +
               ',' + format_double(row.tau) + ',' + format_double(c.re_lambda) +
               ',' + format_double(c.im_lambda) + ',' + format_double(c.re_b) +
               ',' + format_double(c.im_b) + ',' + format_double(c.re_c) + ',' +
               format_double(c.im_c) + ',' + opt(c.exp_lambda_re) + ',' +
               opt(c.exp_lambda_im) + ',' + opt(c.exp_w_re) + ',' +
               opt(c.exp_w_im) + ',' + (c.passed() ? "1" : "0") + '\n';
    }
    return out;
}

} // namespace dssmor

#endif /* DSSMOR_BATCH_HPP */
