#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "config.hpp"

namespace wavechaos {

enum class Status { pass, fail, warning, low_confidence, degenerate };

inline const char* to_string(Status s)
{
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::warning: return "warning";
    case Status::low_confidence: return "low_confidence";
    case Status::degenerate: return "degenerate";
    }
    return "?";
}

struct EstimateReport {
    std::string name;
    double value = 0;
    double bound = std::numeric_limits<double>::infinity();
    double error_estimate = 0;
    bool pass = false;
    Status status = Status::fail;
    nlohmann::json meta = nlohmann::json::object();

    void set(bool ok, Status when_not = Status::fail)
    {
        pass = ok;
        status = ok ? Status::pass : when_not;
    }

    std::string params_hash() const { return fnv1a_hex(name + meta.dump()); }

    nlohmann::json to_json() const
    {
        auto num = [](double v) -> nlohmann::json {
            if (std::isfinite(v)) return v;
            return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
        };
        return {{"name", name}, {"value", num(value)}, {"bound", num(bound)},
                {"error_estimate", num(error_estimate)}, {"pass", pass},
                {"status", to_string(status)}, {"params_hash", params_hash()}, {"meta", meta}};
    }

    static std::string csv_header() { return "name,value,bound,error,pass,params_hash"; }

    std::string csv_row() const
    {
        return name + "," + fmt_g17(value) + "," + fmt_g17(bound) + "," + fmt_g17(error_estimate) + "," +
               (pass ? "1" : "0") + "," + params_hash();
    }
};

} // namespace wavechaos
