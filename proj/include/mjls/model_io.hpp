#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "mjls/model.hpp"

namespace mjls {

/// Which transition and noise block to use when a file carries several (1-based).
struct ModelSelection {
    std::size_t transition = 1;
    std::size_t noise = 1;
};

/**
 * Model files are JSON documents:
 *
 *   {
 *     "modes": 2,
 *     "dims": {"state": 2, "input": 1, "noise": 2},
 *     "A": [ [[1.2, 1.2], [0, 1]], [[1, 0.8], [0, 1]] ],
 *     "B": ..., "H": ..., "Q": ..., "R": ...,
 *     "T": [[0.9, 0.1], [0.1, 0.9]],
 *     "W": [[1e-4, 0], [0, 1e-4]]
 *   }
 *
 * Per-mode families are arrays of row-major matrices (mode 1 first). "T" and
 * "W" hold either one matrix or an array of alternative matrices, picked by
 * ModelSelection. Unknown keys are rejected.
 */
MjlsModel parse_model(const std::string& text, const ModelSelection& sel = {});

/// Reads, parses, validates and symmetrizes. Throws ValidationError with diagnostics.
MjlsModel load_model(const std::filesystem::path& path, const ModelSelection& sel = {});

/// Number of alternative T and W blocks stored in the document.
struct ModelBlockCounts {
    std::size_t transitions = 0;
    std::size_t noises = 0;
};
ModelBlockCounts count_model_blocks(const std::string& text);

/// Serializes with a single T and W block. Doubles are written round-trip exact.
std::string dump_model(const MjlsModel& model);
void save_model(const MjlsModel& model, const std::filesystem::path& path);

/// Gain files: {"L": [[...], ...]}
Matrix parse_gain(const std::string& text);
Matrix load_gain(const std::filesystem::path& path);
std::string dump_gain(const Matrix& gain);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace mjls
