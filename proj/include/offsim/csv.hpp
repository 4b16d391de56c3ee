#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "offsim/evaluate.hpp"

namespace offsim {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline constexpr const char* kSweepCsvHeader =
    "algorithm,axis,axis_value,seed,avg_cost,avg_delay_s,avg_energy_j,offload_ratio,flag";

inline std::string sweep_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += r.algorithm;
        out += ',';
        out += r.axis;
        out += ',';
        out += format_double(r.axis_value);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_double(r.avg_cost);
        out += ',';
        out += format_double(r.avg_delay_s);
        out += ',';
        out += format_double(r.avg_energy_j);
        out += ',';
        out += format_double(r.offload_ratio);
        out += ',';
        out += r.flag;
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json sweep_to_json(const std::vector<ResultRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["algorithm"] = r.algorithm;
        row["axis"] = r.axis;
        row["axis_value"] = r.axis_value;
        row["seed"] = r.seed;
        row["avg_cost"] = r.avg_cost;
        row["avg_delay_s"] = r.avg_delay_s;
        row["avg_energy_j"] = r.avg_energy_j;
        row["offload_ratio"] = r.offload_ratio;
        row["flag"] = r.flag;
        arr.push_back(std::move(row));
    }
    return nlohmann::ordered_json{{"rows", std::move(arr)}};
}

inline constexpr const char* kTraceCsvHeader =
    "iteration,lambda1,lambda2,ot_cost,avg_reward,joint_loss";

inline std::string trace_row_fields(const TraceRow& r) {
    std::string out = std::to_string(r.iteration);
    out += ',';
    out += format_double(r.lambda1);
    out += ',';
    out += format_double(r.lambda2);
    out += ',';
    out += format_double(r.ot_cost);
    out += ',';
    out += format_double(r.avg_reward);
    out += ',';
    out += format_double(r.joint_loss);
    return out;
}

inline std::string trace_to_csv(const TrainTrace& trace) {
    std::string out = kTraceCsvHeader;
    out += '\n';
    for (const auto& r : trace) {
        out += trace_row_fields(r);
        out += '\n';
    }
    return out;
}

inline constexpr const char* kConvergeCsvHeader =
    "algorithm,iteration,lambda1,lambda2,ot_cost,avg_reward,joint_loss";

inline std::string converge_to_csv(const std::vector<std::pair<std::string, TraceRow>>& rows) {
    std::string out = kConvergeCsvHeader;
    out += '\n';
    for (const auto& [algo, r] : rows) {
        out += algo;
        out += ',';
        out += trace_row_fields(r);
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json converge_to_json(
    const std::vector<std::pair<std::string, TraceRow>>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [algo, r] : rows) {
        nlohmann::ordered_json row;
        row["algorithm"] = algo;
        row["iteration"] = r.iteration;
        row["lambda1"] = r.lambda1;
        row["lambda2"] = r.lambda2;
        row["ot_cost"] = r.ot_cost;
        row["avg_reward"] = r.avg_reward;
        row["joint_loss"] = r.joint_loss;
        arr.push_back(std::move(row));
    }
    return nlohmann::ordered_json{{"rows", std::move(arr)}};
}

} // namespace offsim
