#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace iva::report {

struct IterationRecord {
    int iteration = 0;
    double iva_cost = 0.0;
    double surrogate_cost = 0.0;
    std::optional<double> sedjoco_residual;
    std::optional<double> isr_db;
};

// Per-run trace plus final time-domain metrics when references were
// available. runtime_seconds is kept out of the serialized forms by default
// so reruns with the same seed produce byte-identical files.
struct SeparationReport {
    std::vector<IterationRecord> records;
    std::vector<double> si_sdr_db;
    std::vector<double> si_sir_db;
    std::vector<double> delta_si_sdr_db;
    std::vector<double> delta_si_sir_db;
    double runtime_seconds = 0.0;

    void write_csv(std::ostream& os) const;
    std::string to_csv() const;
    std::string to_json(bool include_runtime = false) const;
};

inline constexpr const char* kCsvHeader = "iteration,iva_cost,surrogate_cost,sedjoco_residual,isr_db";

// Deterministic shortest-ish decimal rendering used by every CSV writer.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

} // namespace iva::report
