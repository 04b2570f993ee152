#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "arm_models.hpp"
#include "errors.hpp"
#include "experiments.hpp"

namespace bandit_collab {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Instance JSON: {"means": [...], "best": k}
// ---------------------------------------------------------------------------

inline json instance_to_json(const Instance& instance) {
    json j;
    j["means"] = std::vector<double>(instance.means().begin(), instance.means().end());
    j["best"] = instance.best();
    return j;
}

inline Instance instance_from_json(const json& j) {
    if (!j.is_object() || !j.contains("means") || !j["means"].is_array())
        throw usage_error("instance JSON needs a \"means\" array");
    std::vector<double> means;
    for (const auto& v : j["means"]) {
        if (!v.is_number()) throw usage_error("instance means must be numbers");
        means.push_back(v.get<double>());
    }
    Instance instance = Instance::from_means(std::move(means));
    if (j.contains("best")) {
        if (!j["best"].is_number_unsigned() || j["best"].get<std::size_t>() != instance.best())
            throw usage_error("instance JSON \"best\" does not match the unique maximum (arm " +
                              std::to_string(instance.best()) + ")");
    }
    return instance;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline Instance load_instance(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw usage_error(path + ": " + e.what());
    }
    return instance_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kErrorsHeader = "variant,K,T,R,trials,failures,rate,ci_low,ci_high,seed";
inline constexpr std::string_view kSpeedupHeader = "K,R,target_err,T_star,baseline_T,speedup,seed";

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct ErrorsRow {
    std::string variant;
    std::size_t K = 1;
    std::uint64_t T = 0;
    std::size_t R = 1;
    ErrorEstimate estimate;
    std::uint64_t seed = 0;
};

inline std::string errors_csv(const std::vector<ErrorsRow>& rows) {
    std::ostringstream out;
    out << kErrorsHeader << '\n';
    for (const auto& r : rows)
        out << r.variant << ',' << r.K << ',' << r.T << ',' << r.R << ',' << r.estimate.trials << ','
            << r.estimate.failures << ',' << format_real(r.estimate.rate) << ',' << format_real(r.estimate.ci_low)
            << ',' << format_real(r.estimate.ci_high) << ',' << r.seed << '\n';
    return out.str();
}

inline std::string speedup_csv(const std::vector<SpeedupRow>& rows, std::size_t K, double target_err,
                               std::uint64_t seed) {
    std::ostringstream out;
    out << kSpeedupHeader << '\n';
    for (const auto& r : rows)
        out << K << ',' << r.R << ',' << format_real(target_err) << ',' << r.T_star << ',' << r.baseline_T << ','
            << format_real(r.empirical_speedup) << ',' << seed << '\n';
    return out.str();
}

/// Splits CSV text into rows of fields (no quoting; the emitted files never need it).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Content hashing
// ---------------------------------------------------------------------------

/// Git blob object id: SHA-1 over "blob <size>\0<content>".
inline std::string git_blob_hash(std::string_view content) {
    std::string object = "blob " + std::to_string(content.size());
    object.push_back('\0');
    object.append(content);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(object.data(), object.size(), digest, &len, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("SHA-1 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace bandit_collab
