#include "iva/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace iva::report {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

void SeparationReport::write_csv(std::ostream& os) const {
    os << kCsvHeader << '\n';
    for (const IterationRecord& rec : records) {
        os << rec.iteration << ',' << format_double(rec.iva_cost) << ','
           << format_double(rec.surrogate_cost) << ',' << format_optional(rec.sedjoco_residual)
           << ',' << format_optional(rec.isr_db) << '\n';
    }
}

std::string SeparationReport::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

std::string SeparationReport::to_json(bool include_runtime) const {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const IterationRecord& rec : records) {
        nlohmann::json r;
        r["iteration"] = rec.iteration;
        r["iva_cost"] = rec.iva_cost;
        r["surrogate_cost"] = rec.surrogate_cost;
        if (rec.sedjoco_residual) r["sedjoco_residual"] = *rec.sedjoco_residual;
        if (rec.isr_db) r["isr_db"] = *rec.isr_db;
        j["records"].push_back(std::move(r));
    }
    if (!si_sdr_db.empty()) j["si_sdr_db"] = si_sdr_db;
    if (!si_sir_db.empty()) j["si_sir_db"] = si_sir_db;
    if (!delta_si_sdr_db.empty()) j["delta_si_sdr_db"] = delta_si_sdr_db;
    if (!delta_si_sir_db.empty()) j["delta_si_sir_db"] = delta_si_sir_db;
    if (include_runtime) j["runtime_seconds"] = runtime_seconds;
    return j.dump(2);
}

} // namespace iva::report
