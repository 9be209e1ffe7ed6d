#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thz/beam.hpp"
#include "thz/geometry.hpp"
#include "thz/signal.hpp"

namespace thz::io {

/// Raised for files that are unreadable, malformed, or inconsistent with
/// their header.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kSchemaVersion = "1";

enum class Encoding { Binary, Csv };

/// A dataset file: JSON header plus a flat float64 payload.
///
/// Binary payloads live in a sidecar next to the header (same stem, ".bin"),
/// little-endian, offset index fastest. CSV payloads are stored inline in the
/// header under payload.data with 17 significant digits.
struct Dataset {
    nlohmann::json header;
    std::vector<double> payload;
};

void write_dataset(const std::filesystem::path& header_path, const Dataset& ds, Encoding enc = Encoding::Binary);
Dataset read_dataset(const std::filesystem::path& header_path);

/// Number of payload values implied by the header's kind and dimensions.
std::size_t expected_count(const nlohmann::json& header);

nlohmann::json grid_json(const ImageGrid& g);
ImageGrid grid_from_json(const nlohmann::json& j);
nlohmann::json geometry_json(const ScanGeometry& g);
ScanGeometry geometry_from_json(const nlohmann::json& j);
nlohmann::json material_json(const MaterialParams& m);
MaterialParams material_from_json(const nlohmann::json& j);

Dataset image_dataset(const DensityImage& f);
DensityImage image_from(const Dataset& ds);

/// `mode` is "P" or "I"; `domain` is "ratio" (P/P_ref-like values) or "log"
/// (Radon-domain data).
Dataset sinogram_dataset(const Sinogram& s, const std::string& mode, const std::string& domain);
Sinogram sinogram_from(const Dataset& ds);

/// Trace bundle: payload holds the reference first, then one trace per cell.
Dataset traces_dataset(const RawDataSet& data);
RawDataSet traces_from(const Dataset& ds);

/// Binary 8-bit PGM (P5) with linear min-max scaling; a constant image maps to 0.
void write_pgm(const std::filesystem::path& path, const DensityImage& f);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace thz::io
