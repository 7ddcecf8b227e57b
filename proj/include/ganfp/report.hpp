#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "ganfp/attribution.hpp"
#include "ganfp/keyvalue.hpp"

namespace ganfp {

// Text serializations of evaluation results. Reals use the shortest
// round-trip decimal form so identical results give identical bytes.

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Header `residual_set,<fingerprint labels...>`, then one row per set.
inline std::string to_csv(const CorrMatrix& m) {
    std::string out = "residual_set";
    for (const auto& l : m.col_labels) out += "," + csv_field(l);
    out += "\n";
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        out += csv_field(m.row_labels[i]);
        for (double v : m.values[i]) out += "," + format_real(v);
        out += "\n";
    }
    return out;
}

inline nlohmann::ordered_json to_json(const CorrMatrix& m) {
    nlohmann::ordered_json j;
    j["row_labels"] = m.row_labels;
    j["col_labels"] = m.col_labels;
    j["values"] = m.values;
    return j;
}

/// Header `true\predicted,<labels...>`, raw counts.
inline std::string to_csv(const ConfusionMatrix& m) {
    std::string out = "true\\predicted";
    for (const auto& l : m.labels) out += "," + csv_field(l);
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        out += csv_field(m.labels[i]);
        for (auto v : m.counts[i]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

/// Counts plus the row-normalized display matrix, where entries under the
/// display threshold are null.
inline nlohmann::ordered_json to_json(const ConfusionMatrix& m) {
    nlohmann::ordered_json j;
    j["labels"] = m.labels;
    j["counts"] = m.counts;
    j["display_threshold"] = m.display_threshold;
    auto display = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < m.labels.size(); ++k) {
            const auto f = m.display_fraction(i, k);
            row.push_back(f ? nlohmann::ordered_json(*f) : nlohmann::ordered_json(nullptr));
        }
        display.push_back(std::move(row));
    }
    j["display"] = std::move(display);
    j["total"] = m.total();
    j["correct"] = m.correct();
    j["accuracy"] = m.accuracy();
    return j;
}

/// Header `fpr,tpr`, one row per curve vertex.
inline std::string to_csv(const RocCurve& c) {
    std::string out = "fpr,tpr\n";
    for (const auto& p : c.points) out += format_real(p.fpr) + "," + format_real(p.tpr) + "\n";
    return out;
}

inline nlohmann::ordered_json to_json(const RocCurve& c) {
    nlohmann::ordered_json j;
    j["auc"] = c.auc;
    j["n_positive"] = c.n_pos;
    j["n_negative"] = c.n_neg;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points) pts.push_back({p.fpr, p.tpr});
    j["points"] = std::move(pts);
    return j;
}

}  // namespace ganfp
