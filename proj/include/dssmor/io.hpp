///
/// \file io.hpp
///
/// File formats: JSON model banks and reducer configs, CSV traces and SISO
/// signals. Doubles are written with 17 significant digits so every value
/// round-trips exactly.
///
#ifndef DSSMOR_IO_HPP
#define DSSMOR_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <dssmor/model.hpp>
#include <dssmor/reducer.hpp>
#include <dssmor/simulate.hpp>

namespace dssmor
{

inline std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    out << text;
    if (!out)
    {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

//------------------------------------------------------------------------------
// Model bank
//------------------------------------------------------------------------------

///
/// ### ModelBank
///
/// JSON document `{"models": [{"n", "lambda_re", "lambda_im", "w_re", "w_im",
/// "delta"}, ...]}`. An optional top-level `"note"` string is carried along.
///
struct ModelBank
{
    std::vector<DssExpParams> models;
    std::string note;
};

namespace detail
{

inline RVector json_vector(const nlohmann::json& j, const char* key,
                           std::size_t index)
{
    if (!j.contains(key) || !j.at(key).is_array())
    {
        throw Error(ErrorKind::io, "model " + std::to_string(index) +
                                       ": missing array '" + key + "'");
    }
    const auto& arr = j.at(key);
    RVector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        if (!arr[i].is_number())
        {
            throw Error(ErrorKind::io, "model " + std::to_string(index) +
                                           ": non-numeric entry in '" + key +
                                           "'");
        }
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

inline void append_array(std::string& out, const RVector& v)
{
    out += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        if (i > 0)
        {
            out += ", ";
        }
        out += format_double(v[i]);
    }
    out += ']';
}

inline std::string json_escape(const std::string& s)
{
    return nlohmann::json(s).dump();
}

} // namespace detail

inline ModelBank parse_bank(const std::string& text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorKind::io, std::string("bank is not valid JSON: ") +
                                       e.what());
    }
    if (!doc.is_object() || !doc.contains("models") ||
        !doc.at("models").is_array())
    {
        throw Error(ErrorKind::io, "bank needs a top-level 'models' array");
    }
    ModelBank bank;
    if (doc.contains("note") && doc.at("note").is_string())
    {
        bank.note = doc.at("note").get<std::string>();
    }
    std::size_t index = 0;
    for (const auto& m : doc.at("models"))
    {
        DssExpParams p;
        p.lambda_re = detail::json_vector(m, "lambda_re", index);
        p.lambda_im = detail::json_vector(m, "lambda_im", index);
        p.w_re = detail::json_vector(m, "w_re", index);
        p.w_im = detail::json_vector(m, "w_im", index);
        if (!m.contains("delta") || !m.at("delta").is_number())
        {
            throw Error(ErrorKind::io,
                        "model " + std::to_string(index) + ": missing 'delta'");
        }
        p.delta = m.at("delta").get<double>();
        if (m.contains("n") &&
            m.at("n").get<long long>() != static_cast<long long>(p.size()))
        {
            throw Error(ErrorKind::io, "model " + std::to_string(index) +
                                           ": 'n' does not match array length");
        }
        try
        {
            p.validate();
        }
        catch (const Error& e)
        {
            throw Error(ErrorKind::io,
                        "model " + std::to_string(index) + ": " + e.what());
        }
        bank.models.push_back(std::move(p));
        ++index;
    }
    return bank;
}

inline ModelBank read_bank(const std::string& path)
{
    return parse_bank(read_text_file(path));
}

inline std::string serialize_bank(const ModelBank& bank)
{
    std::string out = "{\n";
    if (!bank.note.empty())
    {
        out += "  \"note\": " + detail::json_escape(bank.note) + ",\n";
    }
    out += "  \"models\": [";
    for (std::size_t i = 0; i < bank.models.size(); ++i)
    {
        const DssExpParams& p = bank.models[i];
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"n\": " + std::to_string(p.size());
        out += ", \"lambda_re\": ";
        detail::append_array(out, p.lambda_re);
        out += ", \"lambda_im\": ";
        detail::append_array(out, p.lambda_im);
        out += ", \"w_re\": ";
        detail::append_array(out, p.w_re);
        out += ", \"w_im\": ";
        detail::append_array(out, p.w_im);
        out += ", \"delta\": " + format_double(p.delta) + "}";
    }
    out += bank.models.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

inline void write_bank(const std::string& path, const ModelBank& bank)
{
    write_text_file(path, serialize_bank(bank));
}

///
/// Seeded synthetic bank: model `i` is `random_stable_model(n, seed_i)` with
/// `log10(delta)` uniform in `[log10(delta_min), log10(delta_max)]`.
///
inline ModelBank synthetic_bank(std::size_t count, Eigen::Index n,
                                std::uint64_t seed, double delta_min = 1e-3,
                                double delta_max = 1e-1)
{
    ModelBank bank;
    bank.note = "synthetic: seeded random exp-parameterized models (seed " +
                std::to_string(seed) + ")";
    for (std::size_t i = 0; i < count; ++i)
    {
        NormalStream rng(derive_seed(seed, i, 0xde17a));
        const double u = rng.next_uniform();
        const double lo = std::log10(delta_min);
        const double hi = std::log10(delta_max);
        const double delta = std::pow(10.0, lo + (hi - lo) * u);
        bank.models.push_back(
            random_stable_model(n, derive_seed(seed, i), delta));
    }
    return bank;
}

//------------------------------------------------------------------------------
// Reducer config
//------------------------------------------------------------------------------

///
/// Applies overrides from a JSON object with any of `tol`, `c1`, `alpha_ini`,
/// `rho`, `k_max`, `max_backtracks`, `parameterization`. The keys may sit at
/// the top level or inside a `"reducer"` object.
///
inline ReducerConfig parse_reducer_config(const std::string& text,
                                          ReducerConfig cfg = {})
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorKind::io, std::string("config is not valid JSON: ") +
                                       e.what());
    }
    const nlohmann::json& j =
        doc.contains("reducer") ? doc.at("reducer") : doc;
    try
    {
        if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
        if (j.contains("c1")) cfg.c1 = j.at("c1").get<double>();
        if (j.contains("alpha_ini")) cfg.alpha_ini = j.at("alpha_ini").get<double>();
        if (j.contains("rho")) cfg.rho = j.at("rho").get<double>();
        if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<int>();
        if (j.contains("max_backtracks"))
            cfg.max_backtracks = j.at("max_backtracks").get<int>();
        if (j.contains("parameterization"))
        {
            const auto p = j.at("parameterization").get<std::string>();
            if (p == "raw-complex")
                cfg.parameterization = Parameterization::raw_complex;
            else if (p == "dss-exp")
                cfg.parameterization = Parameterization::dss_exp;
            else
                throw Error(ErrorKind::configuration,
                            "unknown parameterization '" + p + "'");
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorKind::io, std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

//------------------------------------------------------------------------------
// CSV
//------------------------------------------------------------------------------

inline std::string trace_csv(const ReductionTrace& trace)
{
    std::string out = "k,f,D,alpha,backtracks,stable\n";
    for (const TraceRow& row : trace.rows)
    {
        out += std::to_string(row.k) + ',' + format_double(row.f) + ',' +
               format_double(row.d) + ',' +
               (row.alpha ? format_double(*row.alpha) : std::string()) + ',' +
               std::to_string(row.backtracks) + ',' + (row.stable ? "1" : "0") +
               '\n';
    }
    return out;
}

/// SISO signal as `k,re,im` with `k` starting at 1.
inline std::string signal_csv(const SequenceSignal& s)
{
    if (s.channels() != 1)
    {
        throw Error(ErrorKind::dimension, "signal CSV holds one channel");
    }
    std::string out = "k,re,im\n";
    for (Eigen::Index k = 0; k < s.length(); ++k)
    {
        const Complex v = s.samples(0, k);
        out += std::to_string(k + 1) + ',' + format_double(v.real()) + ',' +
               format_double(v.imag()) + '\n';
    }
    return out;
}

inline SequenceSignal parse_signal_csv(const std::string& text, double delta)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,re,im", 0) != 0)
    {
        throw Error(ErrorKind::io, "signal CSV must start with 'k,re,im'");
    }
    std::vector<Complex> values;
    while (std::getline(in, line))
    {
        if (line.empty() || line == "\r")
        {
            continue;
        }
        std::istringstream row(line);
        std::string k, re, im;
        if (!std::getline(row, k, ',') || !std::getline(row, re, ',') ||
            !std::getline(row, im))
        {
            throw Error(ErrorKind::io, "malformed signal row '" + line + "'");
        }
        try
        {
            if (std::stoll(k) != static_cast<long long>(values.size()) + 1)
            {
                throw Error(ErrorKind::io, "signal rows must be k = 1, 2, ...");
            }
            values.emplace_back(std::stod(re), std::stod(im));
        }
        catch (const std::logic_error&)
        {
            throw Error(ErrorKind::io, "malformed signal row '" + line + "'");
        }
    }
    SequenceSignal s{CMatrix(1, static_cast<Eigen::Index>(values.size())),
                     delta};
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        s.samples(0, static_cast<Eigen::Index>(i)) = values[i];
    }
    return s;
}

} // namespace dssmor

#endif /* DSSMOR_IO_HPP */
