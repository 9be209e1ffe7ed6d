#include "thz/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace thz::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::filesystem::path sidecar_for(const fs::path& header_path) {
    fs::path p = header_path;
    p.replace_extension(".bin");
    return p;
}

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
        return r;
    }
    return v;
}

std::size_t row_length(const json& header) {
    const std::string kind = header.at("kind");
    if (kind == "image") return header.at("grid").at("n").get<std::size_t>();
    if (kind == "sinogram") return header.at("geometry").at("offsets").size();
    return header.at("time").at("n_samples").get<std::size_t>();
}

std::string format_csv(const std::vector<double>& v, std::size_t per_line) {
    std::string out;
    char buf[32];
    for (std::size_t k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", v[k]);
        out += buf;
        out += (per_line > 0 && (k + 1) % per_line == 0) ? '\n' : ',';
    }
    if (!out.empty() && out.back() == ',') out.back() = '\n';
    return out;
}

std::vector<double> parse_csv(const std::string& text) {
    std::vector<double> out;
    const char* p = text.c_str();
    const char* end = p + text.size();
    while (p < end) {
        while (p < end && (*p == ',' || *p == '\n' || *p == '\r' || *p == ' ')) ++p;
        if (p >= end) break;
        char* next = nullptr;
        const double v = std::strtod(p, &next);
        if (next == p) throw DataError("dataset: malformed CSV payload");
        out.push_back(v);
        p = next;
    }
    return out;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw DataError(msg);
}

}  // namespace

std::size_t expected_count(const json& header) {
    const std::string kind = header.at("kind");
    if (kind == "image") {
        const auto n = header.at("grid").at("n").get<std::size_t>();
        return n * n;
    }
    const auto& geo = header.at("geometry");
    const std::size_t cells = geo.at("angles").size() * geo.at("offsets").size();
    if (kind == "sinogram") return cells;
    if (kind == "traces") return (cells + 1) * header.at("time").at("n_samples").get<std::size_t>();
    throw DataError("dataset: unknown kind '" + kind + "'");
}

void write_dataset(const fs::path& header_path, const Dataset& ds, Encoding enc) {
    json header = ds.header;
    header["schema_version"] = kSchemaVersion;
    require(expected_count(header) == ds.payload.size(), "dataset: payload length does not match header");
    if (enc == Encoding::Binary) {
        const fs::path bin = sidecar_for(header_path);
        header["payload"] = {{"encoding", "f64le"}, {"file", bin.filename().string()}, {"count", ds.payload.size()}};
        std::ofstream out(bin, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + bin.string());
        std::vector<std::uint64_t> raw(ds.payload.size());
        for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = to_little(std::bit_cast<std::uint64_t>(ds.payload[k]));
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
        if (!out) throw std::runtime_error("cannot write " + bin.string());
    } else {
        header["payload"] = {{"encoding", "csv"}, {"count", ds.payload.size()},
                             {"data", format_csv(ds.payload, row_length(header))}};
    }
    std::ofstream out(header_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + header_path.string());
    out << header.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + header_path.string());
}

Dataset read_dataset(const fs::path& header_path) {
    std::ifstream in(header_path);
    require(static_cast<bool>(in), "cannot open " + header_path.string());
    Dataset ds;
    try {
        ds.header = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("dataset: malformed header " + header_path.string() + ": " + e.what());
    }
    try {
        require(ds.header.value("schema_version", std::string{}) == kSchemaVersion,
                "dataset: missing or unsupported schema_version");
        const auto& payload = ds.header.at("payload");
        const auto count = payload.at("count").get<std::size_t>();
        require(count == expected_count(ds.header), "dataset: header dimensions do not match payload count");
        const std::string encoding = payload.at("encoding");
        if (encoding == "f64le") {
            const fs::path bin = header_path.parent_path() / payload.at("file").get<std::string>();
            std::ifstream b(bin, std::ios::binary);
            require(static_cast<bool>(b), "cannot open payload " + bin.string());
            std::vector<std::uint64_t> raw(count);
            b.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 8));
            require(static_cast<std::size_t>(b.gcount()) == count * 8, "dataset: payload file too short");
            b.peek();
            require(b.eof(), "dataset: payload file longer than header says");
            ds.payload.resize(count);
            for (std::size_t k = 0; k < count; ++k) ds.payload[k] = std::bit_cast<double>(to_little(raw[k]));
        } else if (encoding == "csv") {
            ds.payload = parse_csv(payload.at("data").get<std::string>());
            require(ds.payload.size() == count, "dataset: CSV payload length does not match header");
        } else {
            throw DataError("dataset: unknown payload encoding '" + encoding + "'");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("dataset: incomplete header: ") + e.what());
    }
    return ds;
}

json grid_json(const ImageGrid& g) { return {{"n", g.size()}, {"extent", g.extent()}}; }

ImageGrid grid_from_json(const json& j) { return ImageGrid(j.at("n").get<std::size_t>(), j.at("extent").get<double>()); }

json geometry_json(const ScanGeometry& g) { return {{"angles", g.angles()}, {"offsets", g.offsets()}}; }

ScanGeometry geometry_from_json(const json& j) {
    return ScanGeometry(j.at("angles").get<std::vector<double>>(), j.at("offsets").get<std::vector<double>>());
}

json material_json(const MaterialParams& m) {
    return {{"n", m.n}, {"n0", m.n0}, {"alpha_m", m.alpha_m}, {"c0", m.c0}};
}

MaterialParams material_from_json(const json& j) {
    MaterialParams m{j.at("n").get<double>(), j.at("n0").get<double>(), j.at("alpha_m").get<double>(),
                     j.at("c0").get<double>()};
    m.validate();
    return m;
}

Dataset image_dataset(const DensityImage& f) {
    return Dataset{{{"kind", "image"}, {"grid", grid_json(f.grid)}}, f.values};
}

DensityImage image_from(const Dataset& ds) {
    require(ds.header.value("kind", std::string{}) == "image", "dataset: expected an image file");
    try {
        return DensityImage(grid_from_json(ds.header.at("grid")), ds.payload);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

Dataset sinogram_dataset(const Sinogram& s, const std::string& mode, const std::string& domain) {
    return Dataset{{{"kind", "sinogram"}, {"geometry", geometry_json(s.geometry)}, {"mode", mode}, {"domain", domain}},
                   s.values};
}

Sinogram sinogram_from(const Dataset& ds) {
    require(ds.header.value("kind", std::string{}) == "sinogram", "dataset: expected a sinogram file");
    try {
        return Sinogram(geometry_from_json(ds.header.at("geometry")), ds.payload);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

Dataset traces_dataset(const RawDataSet& data) {
    const std::size_t n = data.reference.samples.size();
    Dataset ds{{{"kind", "traces"},
                {"geometry", geometry_json(data.geometry)},
                {"mode", "raw-traces"},
                {"time", {{"t0", data.reference.t0}, {"dt", data.reference.dt}, {"n_samples", n}}}},
               {}};
    ds.payload.reserve((data.traces.size() + 1) * n);
    ds.payload.insert(ds.payload.end(), data.reference.samples.begin(), data.reference.samples.end());
    for (const auto& tr : data.traces) {
        require(tr.samples.size() == n && tr.t0 == data.reference.t0 && tr.dt == data.reference.dt,
                "dataset: traces must share the reference time axis");
        ds.payload.insert(ds.payload.end(), tr.samples.begin(), tr.samples.end());
    }
    return ds;
}

RawDataSet traces_from(const Dataset& ds) {
    require(ds.header.value("kind", std::string{}) == "traces", "dataset: expected a trace bundle");
    try {
        const auto& time = ds.header.at("time");
        const double t0 = time.at("t0");
        const double dt = time.at("dt");
        const auto n = time.at("n_samples").get<std::size_t>();
        auto geo = geometry_from_json(ds.header.at("geometry"));
        auto slice = [&](std::size_t idx) {
            auto first = ds.payload.begin() + static_cast<std::ptrdiff_t>(idx * n);
            return PulseTrace(t0, dt, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n)));
        };
        std::vector<PulseTrace> traces;
        traces.reserve(geo.size());
        for (std::size_t c = 0; c < geo.size(); ++c) traces.push_back(slice(c + 1));
        return RawDataSet(std::move(geo), std::move(traces), slice(0));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

void write_pgm(const fs::path& path, const DensityImage& f) {
    const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    const std::size_t n = f.grid.size();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << n << ' ' << n << "\n255\n";
    std::vector<unsigned char> bytes(f.values.size());
    for (std::size_t k = 0; k < bytes.size(); ++k) {
        const double t = span > 0.0 ? (f.values[k] - lo) / span : 0.0;
        bytes[k] = static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
    return hex.str();
}

}  // namespace thz::io
