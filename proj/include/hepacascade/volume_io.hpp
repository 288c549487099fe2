#pragma once
#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "volume.hpp"

namespace hepa {

namespace nifti {

// NIfTI-1 header, 348 bytes, fields per the reference nifti1.h layout.
struct header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(header) == 348, "nifti header must be 348 bytes");

enum dtype : std::int16_t {
    dt_uint8 = 2,
    dt_int16 = 4,
    dt_int32 = 8,
    dt_float32 = 16,
    dt_float64 = 64,
    dt_uint16 = 512,
};

inline int dtype_bytes(std::int16_t dt) {
    switch (dt) {
        case dt_uint8: return 1;
        case dt_int16: return 2;
        case dt_uint16: return 2;
        case dt_int32: return 4;
        case dt_float32: return 4;
        case dt_float64: return 8;
        default: return 0;
    }
}

template <typename T>
inline void swap_bytes(T& v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0, j = sizeof(T) - 1; i < j; ++i, --j) std::swap(p[i], p[j]);
}

inline void swap_header(header& h) {
    swap_bytes(h.sizeof_hdr);
    swap_bytes(h.extents);
    swap_bytes(h.session_error);
    for (auto& d : h.dim) swap_bytes(d);
    swap_bytes(h.intent_p1);
    swap_bytes(h.intent_p2);
    swap_bytes(h.intent_p3);
    swap_bytes(h.intent_code);
    swap_bytes(h.datatype);
    swap_bytes(h.bitpix);
    swap_bytes(h.slice_start);
    for (auto& p : h.pixdim) swap_bytes(p);
    swap_bytes(h.vox_offset);
    swap_bytes(h.scl_slope);
    swap_bytes(h.scl_inter);
    swap_bytes(h.slice_end);
    swap_bytes(h.cal_max);
    swap_bytes(h.cal_min);
    swap_bytes(h.slice_duration);
    swap_bytes(h.toffset);
    swap_bytes(h.glmax);
    swap_bytes(h.glmin);
    swap_bytes(h.qform_code);
    swap_bytes(h.sform_code);
    swap_bytes(h.quatern_b);
    swap_bytes(h.quatern_c);
    swap_bytes(h.quatern_d);
    swap_bytes(h.qoffset_x);
    swap_bytes(h.qoffset_y);
    swap_bytes(h.qoffset_z);
    for (auto& v : h.srow_x) swap_bytes(v);
    for (auto& v : h.srow_y) swap_bytes(v);
    for (auto& v : h.srow_z) swap_bytes(v);
}

template <typename S>
inline void cast_to_float(const std::vector<char>& raw, std::size_t n, bool swapped,
                          float slope, float inter, std::vector<float>& out) {
    const S* src = reinterpret_cast<const S*>(raw.data());
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        S v = src[i];
        if (swapped) swap_bytes(v);
        out[i] = static_cast<float>(v) * slope + inter;
    }
}

// Reads a .nii or .nii.gz file (gz layer handles plain files transparently).
inline ct_volume read(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw missing_file_error("cannot open " + path);
    header h{};
    if (gzread(f, &h, sizeof(h)) != static_cast<int>(sizeof(h))) {
        gzclose(f);
        throw format_error(path + ": truncated NIfTI header");
    }
    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        swap_header(h);
        swapped = true;
        if (h.sizeof_hdr != 348) {
            gzclose(f);
            throw format_error(path + ": not a NIfTI-1 file (bad sizeof_hdr)");
        }
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0 && std::strncmp(h.magic, "ni1", 3) != 0) {
        gzclose(f);
        throw format_error(path + ": not a NIfTI-1 file (bad magic)");
    }
    int ndim = h.dim[0];
    bool three_d = ndim == 3 || (ndim > 3 && h.dim[4] <= 1 && h.dim[5] <= 1);
    if (!three_d) {
        gzclose(f);
        throw format_error(path + ": only 3D volumes are supported");
    }
    int bytes = dtype_bytes(h.datatype);
    if (bytes == 0) {
        gzclose(f);
        throw format_error(path + ": unsupported NIfTI datatype " + std::to_string(h.datatype));
    }
    std::size_t nx = h.dim[1], ny = h.dim[2], nz = h.dim[3];
    if (nx < 1 || ny < 1 || nz < 1) {
        gzclose(f);
        throw format_error(path + ": degenerate dimensions");
    }
    // skip any header extension up to vox_offset
    long skip = static_cast<long>(h.vox_offset) - static_cast<long>(sizeof(h));
    if (skip > 0) {
        std::vector<char> junk(static_cast<std::size_t>(skip));
        if (gzread(f, junk.data(), static_cast<unsigned>(junk.size())) !=
            static_cast<int>(junk.size())) {
            gzclose(f);
            throw format_error(path + ": truncated header extension");
        }
    }
    std::size_t n = nx * ny * nz;
    std::vector<char> raw(n * static_cast<std::size_t>(bytes));
    std::size_t got = 0;
    while (got < raw.size()) {
        unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(raw.size() - got, 1u << 28));
        int r = gzread(f, raw.data() + got, chunk);
        if (r <= 0) break;
        got += static_cast<std::size_t>(r);
    }
    gzclose(f);
    if (got != raw.size()) throw format_error(path + ": truncated voxel payload");

    float slope = h.scl_slope, inter = h.scl_inter;
    if (slope == 0.0f) {
        slope = 1.0f;
        inter = 0.0f;
    }

    ct_volume v;
    // NIfTI stores i (=x) fastest; with the slice axis mapped to k the linear
    // layout already matches our (D,H,W) row-major order, so no reorder pass.
    v.vox.shape = {nz, ny, nx};
    switch (h.datatype) {
        case dt_uint8: cast_to_float<std::uint8_t>(raw, n, false, slope, inter, v.vox.data); break;
        case dt_int16: cast_to_float<std::int16_t>(raw, n, swapped, slope, inter, v.vox.data); break;
        case dt_uint16: cast_to_float<std::uint16_t>(raw, n, swapped, slope, inter, v.vox.data); break;
        case dt_int32: cast_to_float<std::int32_t>(raw, n, swapped, slope, inter, v.vox.data); break;
        case dt_float32: cast_to_float<float>(raw, n, swapped, slope, inter, v.vox.data); break;
        case dt_float64: cast_to_float<double>(raw, n, swapped, slope, inter, v.vox.data); break;
    }
    v.spacing = {h.pixdim[3] > 0 ? h.pixdim[3] : 1.0, h.pixdim[2] > 0 ? h.pixdim[2] : 1.0,
                 h.pixdim[1] > 0 ? h.pixdim[1] : 1.0};
    header native = h;  // keep in native order for round-trip
    v.meta.nifti_header.resize(sizeof(header));
    std::memcpy(v.meta.nifti_header.data(), &native, sizeof(header));
    return v;
}

inline header make_header(const std::array<std::size_t, 3>& shape,
                          const std::array<double, 3>& spacing, std::int16_t dt,
                          const volume_meta& meta) {
    header h{};
    if (meta.has_nifti()) std::memcpy(&h, meta.nifti_header.data(), sizeof(header));
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(shape[2]);
    h.dim[2] = static_cast<std::int16_t>(shape[1]);
    h.dim[3] = static_cast<std::int16_t>(shape[0]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = dt;
    h.bitpix = static_cast<std::int16_t>(8 * dtype_bytes(dt));
    if (h.pixdim[0] == 0.0f) h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(spacing[2]);
    h.pixdim[2] = static_cast<float>(spacing[1]);
    h.pixdim[3] = static_cast<float>(spacing[0]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    if (!meta.has_nifti()) {
        h.sform_code = 1;
        h.srow_x[0] = static_cast<float>(spacing[2]);
        h.srow_y[1] = static_cast<float>(spacing[1]);
        h.srow_z[2] = static_cast<float>(spacing[0]);
    }
    std::memcpy(h.magic, "n+1", 4);
    return h;
}

inline void write_bytes(const std::string& path, const header& h, const void* payload,
                        std::size_t payload_bytes) {
    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    const char pad[4] = {0, 0, 0, 0};
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw io_error("cannot write " + path);
        bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)) &&
                  gzwrite(f, pad, 4) == 4;
        const char* p = static_cast<const char*>(payload);
        std::size_t done = 0;
        while (ok && done < payload_bytes) {
            unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(payload_bytes - done, 1u << 28));
            ok = gzwrite(f, p + done, chunk) == static_cast<int>(chunk);
            done += chunk;
        }
        gzclose(f);
        if (!ok) throw io_error("failed writing " + path);
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot write " + path);
        f.write(reinterpret_cast<const char*>(&h), sizeof(h));
        f.write(pad, 4);
        f.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
        if (!f) throw io_error("failed writing " + path);
    }
}

}  // namespace nifti

namespace rawfmt {

// Dependency-free fixture format: a JSON header next to a little-endian
// contiguous payload in slice-major order.
inline std::string payload_path_for(const std::string& header_path) {
    std::string p = header_path;
    p.replace(p.size() - 5, 5, ".bin");
    return p;
}

inline void write(const std::string& path, const std::array<std::size_t, 3>& shape,
                  const std::array<double, 3>& spacing, const std::string& dtype,
                  const void* payload, std::size_t payload_bytes) {
    std::string bin = payload_path_for(path);
    nlohmann::json j;
    j["shape"] = shape;
    j["spacing"] = spacing;
    j["dtype"] = dtype;
    j["byte_order"] = "little";
    j["data"] = std::filesystem::path(bin).filename().string();
    std::ofstream hf(path);
    if (!hf) throw io_error("cannot write " + path);
    hf << j.dump(2) << "\n";
    std::ofstream bf(bin, std::ios::binary);
    if (!bf) throw io_error("cannot write " + bin);
    bf.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
    if (!bf) throw io_error("failed writing " + bin);
}

struct raw_file {
    std::array<std::size_t, 3> shape;
    std::array<double, 3> spacing;
    std::string dtype;
    std::vector<char> payload;
};

inline raw_file read(const std::string& path) {
    std::ifstream hf(path);
    if (!hf) throw missing_file_error("cannot open " + path);
    nlohmann::json j;
    try {
        hf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path + ": bad raw header: " + e.what());
    }
    raw_file r;
    try {
        auto sv = j.at("shape").get<std::vector<std::size_t>>();
        if (sv.size() != 3) throw format_error(path + ": raw shape must be 3D");
        r.shape = {sv[0], sv[1], sv[2]};
        if (j.contains("spacing")) {
            auto sp = j.at("spacing").get<std::vector<double>>();
            r.spacing = {sp.at(0), sp.at(1), sp.at(2)};
        } else {
            r.spacing = {1.0, 1.0, 1.0};
        }
        r.dtype = j.at("dtype").get<std::string>();
        if (j.value("byte_order", "little") != "little")
            throw format_error(path + ": only little-endian payloads supported");
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path + ": bad raw header: " + e.what());
    }
    std::size_t elem = r.dtype == "float32" ? 4 : r.dtype == "uint8" ? 1
                                            : r.dtype == "int16"   ? 2
                                                                   : 0;
    if (elem == 0) throw format_error(path + ": unsupported raw dtype " + r.dtype);
    std::string bin = (std::filesystem::path(path).parent_path() /
                       j.value("data", std::filesystem::path(payload_path_for(path))
                                           .filename()
                                           .string()))
                          .string();
    std::ifstream bf(bin, std::ios::binary);
    if (!bf) throw missing_file_error("cannot open payload " + bin);
    std::size_t n = r.shape[0] * r.shape[1] * r.shape[2] * elem;
    r.payload.resize(n);
    bf.read(r.payload.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(bf.gcount()) != n)
        throw format_error(bin + ": payload shorter than header shape");
    return r;
}

}  // namespace rawfmt

inline bool is_raw_path(const std::string& path) {
    return path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}
inline bool is_nifti_path(const std::string& path) {
    auto ends = [&](const char* s) {
        std::size_t n = std::strlen(s);
        return path.size() > n && path.compare(path.size() - n, n, s) == 0;
    };
    return ends(".nii") || ends(".nii.gz");
}

// Loads a CT volume from NIfTI-1 (.nii/.nii.gz) or the raw fixture format (.json).
inline ct_volume load_volume(const std::string& path) {
    if (!std::filesystem::exists(path)) throw missing_file_error("no such file: " + path);
    if (is_nifti_path(path)) return nifti::read(path);
    if (is_raw_path(path)) {
        auto r = rawfmt::read(path);
        ct_volume v;
        v.vox.shape = r.shape;
        std::size_t n = grid3f::count(r.shape);
        v.vox.data.resize(n);
        if (r.dtype == "float32") {
            std::memcpy(v.vox.data.data(), r.payload.data(), n * sizeof(float));
        } else if (r.dtype == "uint8") {
            for (std::size_t i = 0; i < n; ++i)
                v.vox.data[i] = static_cast<float>(static_cast<std::uint8_t>(r.payload[i]));
        } else {  // int16
            const std::int16_t* p = reinterpret_cast<const std::int16_t*>(r.payload.data());
            for (std::size_t i = 0; i < n; ++i) v.vox.data[i] = static_cast<float>(p[i]);
        }
        v.spacing = r.spacing;
        return v;
    }
    throw format_error(path + ": unknown volume format (expect .nii, .nii.gz or .json)");
}

inline void save_volume(const ct_volume& v, const std::string& path) {
    if (is_nifti_path(path)) {
        auto h = nifti::make_header(v.vox.shape, v.spacing, nifti::dt_float32, v.meta);
        nifti::write_bytes(path, h, v.vox.data.data(), v.vox.data.size() * sizeof(float));
        return;
    }
    if (is_raw_path(path)) {
        rawfmt::write(path, v.vox.shape, v.spacing, "float32", v.vox.data.data(),
                      v.vox.data.size() * sizeof(float));
        return;
    }
    throw format_error(path + ": unknown volume format (expect .nii, .nii.gz or .json)");
}

// Saves a mask with the reference volume's spacing/orientation metadata.
inline void save_mask(const binary_mask& m, const ct_volume& ref, const std::string& path) {
    if (m.vox.shape != ref.vox.shape)
        throw shape_mismatch_error("save_mask: mask shape does not match reference volume");
    if (is_nifti_path(path)) {
        auto h = nifti::make_header(m.vox.shape, ref.spacing, nifti::dt_uint8, ref.meta);
        nifti::write_bytes(path, h, m.vox.data.data(), m.vox.data.size());
        return;
    }
    if (is_raw_path(path)) {
        rawfmt::write(path, m.vox.shape, ref.spacing, "uint8", m.vox.data.data(),
                      m.vox.data.size());
        return;
    }
    throw format_error(path + ": unknown mask format (expect .nii, .nii.gz or .json)");
}

// Saves a mask without a reference volume (unit spacing).
inline void save_mask(const binary_mask& m, const std::string& path) {
    ct_volume ref;
    ref.vox.shape = m.vox.shape;
    save_mask(m, ref, path);
}

inline binary_mask load_mask(const std::string& path) {
    ct_volume v = load_volume(path);
    binary_mask m;
    m.vox.shape = v.vox.shape;
    m.vox.data.resize(v.vox.data.size());
    for (std::size_t i = 0; i < v.vox.data.size(); ++i) {
        float x = v.vox.data[i];
        if (std::fabs(x) < 1e-6f)
            m.vox.data[i] = 0;
        else if (std::fabs(x - 1.0f) < 1e-6f)
            m.vox.data[i] = 1;
        else
            throw format_error(path + ": mask contains values other than 0/1");
    }
    return m;
}

}  // namespace hepa
