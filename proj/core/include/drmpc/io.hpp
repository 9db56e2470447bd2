#pragma once

#include "drmpc/conic.hpp"
#include "drmpc/identification.hpp"
#include "drmpc/lifting.hpp"
#include "drmpc/mpc.hpp"
#include "drmpc/radius.hpp"

#include <string>
#include <vector>

namespace drmpc {

inline constexpr const char* kLibraryVersion = "0.1.0";

// shortest decimal representation that round-trips, locale independent
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/*
 * Dataset file, CSV encoding: '#'-prefixed header block carrying
 * (n, m, T, N, seed, sampling descriptors) and the column list, then one
 * row per record with fields z_0..z_{n+mT-1}, y_0..y_{nT-1}. The JSON
 * encoding mirrors the same fields. read_dataset dispatches on the
 * extension (.json vs anything else = CSV).
 */
void write_dataset_csv(const TrajectoryDataset& data, const std::string& path);
TrajectoryDataset read_dataset_csv(const std::string& path);
void write_dataset_json(const TrajectoryDataset& data, const std::string& path);
TrajectoryDataset read_dataset_json(const std::string& path);
TrajectoryDataset read_dataset(const std::string& path);

// predictor as JSON: row-major matrix, residual list, anchor list,
// structure flag
void write_predictor_json(const MultiStepPredictor& pred, const std::string& path);
MultiStepPredictor read_predictor_json(const std::string& path);

void write_diagnostics_csv(const LooDiagnostics& diag, const std::string& path);

// documented JSON form of a conic program, for external cross-checks
std::string program_to_json(const ConicProgram& prog);
void write_program_json(const ConicProgram& prog, const std::string& path);

void write_run_csv(const ClosedLoopRecord& record, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path);

// experiment configuration as a declarative JSON document; the emitted
// snapshot is canonical and parses back to an identical configuration
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace drmpc
