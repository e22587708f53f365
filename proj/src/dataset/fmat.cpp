#include "cal/fmat.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace cal {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    }
    out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(U)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw FormatError(std::string("FMAT truncated while reading ") + what);
    }
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

DenseMatrix<float> read_fmat_payload(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "FMAT", 4) != 0) {
        throw FormatError("bad FMAT magic");
    }
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kFmatVersion) throw FormatError("unsupported FMAT version " + std::to_string(version));
    const auto rows = get_le<std::uint64_t>(in, "rows");
    const auto cols = get_le<std::uint64_t>(in, "cols");
    if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) throw FormatError("FMAT dimensions too large");

    std::vector<float> values(rows * cols);
    std::vector<unsigned char> bytes(values.size() * 4);
    if (!bytes.empty() && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw FormatError("FMAT payload truncated: expected " + std::to_string(bytes.size()) + " bytes");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i]) |
                                static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                                static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                                static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
        values[i] = std::bit_cast<float>(u);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("FMAT has trailing bytes after payload");
    return DenseMatrix<float>(rows, cols, std::move(values));
}

void write_fmat_payload(std::ostream& out, const DenseMatrix<float>& values) {
    out.write("FMAT", 4);
    put_le<std::uint32_t>(out, kFmatVersion);
    put_le<std::uint64_t>(out, values.rows());
    put_le<std::uint64_t>(out, values.cols());
    for (float v : values.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

std::filesystem::path index_path_for(const std::filesystem::path& fmat_path) {
    auto p = fmat_path;
    p.replace_extension(".index.jsonl");
    return p;
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open FMAT file " + path.string());
    auto values = read_fmat_payload(in);

    const auto index_path = index_path_for(path);
    std::ifstream idx(index_path);
    if (!idx) throw FormatError("missing row index " + index_path.string());
    std::vector<std::string> ids(values.rows());
    std::vector<bool> filled(values.rows(), false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(idx, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw ParseError(index_path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
        }
        if (!j.is_object() || !j.contains("row") || !j["row"].is_number_unsigned() || !j.contains("id") ||
            !j["id"].is_string()) {
            throw ParseError(index_path.string() + ":" + std::to_string(line_no) + ": expected {\"row\", \"id\"}");
        }
        const auto r = j["row"].get<std::size_t>();
        if (r >= ids.size() || filled[r]) {
            throw FormatError(index_path.string() + ":" + std::to_string(line_no) + ": bad or repeated row " +
                              std::to_string(r));
        }
        filled[r] = true;
        ids[r] = j["id"].get<std::string>();
    }
    for (std::size_t r = 0; r < filled.size(); ++r) {
        if (!filled[r]) throw FormatError("row index misses row " + std::to_string(r));
    }
    return FeatureMatrix(std::move(values), std::move(ids));
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& matrix) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError("cannot write FMAT file " + path.string());
        write_fmat_payload(out, matrix.values());
    }
    std::ofstream idx(index_path_for(path));
    if (!idx) throw FormatError("cannot write row index for " + path.string());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        nlohmann::json j;
        j["row"] = r;
        j["id"] = matrix.row_id(r);
        idx << j.dump() << '\n';
    }
}

}  // namespace cal
