#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "intformer/datamodel.hpp"
#include "intformer/explain.hpp"
#include "intformer/models.hpp"
#include "intformer/pipeline.hpp"
#include "intformer/synthgen.hpp"
#include "intformer/trainer.hpp"

namespace intformer {

// All artifact files start with "# config_hash=<hex>" (CSV) or carry a
// config_hash field (JSON/binary) so replays can be checked byte-for-byte.

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);
std::string file_hash_hex(const std::string& path);
bool file_exists(const std::string& path);

// ---- Snapshot / crash CSV -----------------------------------------------------

void write_snapshots_csv(const std::string& path,
                         const std::vector<IntersectionSnapshot>& snapshots,
                         const std::string& config_hash);
std::vector<IntersectionSnapshot> read_snapshots_csv(const std::string& path,
                                                     std::string* config_hash = nullptr);

void write_crashes_csv(const std::string& path, const std::vector<CrashEvent>& crashes,
                       const std::string& config_hash);
std::vector<CrashEvent> read_crashes_csv(const std::string& path,
                                         std::string* config_hash = nullptr);

// ---- Window files ---------------------------------------------------------------

struct WindowsFile {
  std::string config_hash;
  Zone zone = Zone::kApproach;
  int timesteps = 0;
  std::vector<std::string> column_names;
  std::vector<LabeledWindow> windows;
};

void write_windows_file(const std::string& path, const WindowsFile& file);
WindowsFile read_windows_file(const std::string& path);

// ---- Selection / metrics / losses ----------------------------------------------

void write_selection_json(const std::string& path, const SelectionResult& selection,
                          Zone zone, const std::string& config_hash);

void write_losses_csv(const std::string& path, const std::vector<double>& losses,
                      const std::string& config_hash);

// ---- Checkpoints ----------------------------------------------------------------

struct Checkpoint {
  std::string family;
  int timesteps = 0;
  int input_features = 0;
  ModelHyper hyper;
  std::string zone;
  int stacking = 0;
  std::string config_hash;
  std::map<std::string, Tensor> params;
  Normalizer normalizer;
};

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);
std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& checkpoint);

// ---- Attribution exports --------------------------------------------------------

void write_attributions_csv(const std::string& path, const AttributionReport& report,
                            const std::string& config_hash);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows,
                       const std::string& config_hash);

// ---- Calibration ----------------------------------------------------------------

FeatureCalibration calibration_from_json_file(const std::string& path);
void write_calibration_json(const std::string& path,
                            const FeatureCalibration& calibration);

}  // namespace intformer
