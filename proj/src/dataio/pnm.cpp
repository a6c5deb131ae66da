#include "pave3d/dataio/pnm.hpp"

#include <cctype>
#include <fstream>
#include <string>

namespace pave3d::dataio {

namespace {

void skip_pnm_whitespace(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

long read_pnm_int(std::istream& in, const std::filesystem::path& path) {
    skip_pnm_whitespace(in);
    long v = 0;
    if (!(in >> v)) throw CorruptImage("malformed PNM header in " + path.string());
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFile("missing file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + path.string());
    return out;
}

}  // namespace

void write_pgm16(const core::DepthImage& img, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    std::vector<unsigned char> row(size_t(img.width) * 2);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::uint16_t d = img.at(x, y);
            row[size_t(x) * 2] = static_cast<unsigned char>(d >> 8);
            row[size_t(x) * 2 + 1] = static_cast<unsigned char>(d & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw IoFailure("short write to " + path.string());
}

core::DepthImage read_pgm16(const std::filesystem::path& path) {
    auto in = open_input(path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw CorruptImage("bad magic in " + path.string() + " (want P5)");
    const long w = read_pnm_int(in, path);
    const long h = read_pnm_int(in, path);
    const long maxval = read_pnm_int(in, path);
    if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16)
        throw CorruptImage("bad dimensions in " + path.string());
    if (maxval != 65535)
        throw CorruptImage("bad maxval " + std::to_string(maxval) + " in " + path.string() +
                           " (depth PGM requires 65535)");
    in.get();  // single whitespace byte after maxval

    core::DepthImage img{int(w), int(h)};
    std::vector<unsigned char> row(size_t(w) * 2);
    for (long y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (in.gcount() != std::streamsize(row.size()))
            throw CorruptImage("truncated pixel data in " + path.string());
        for (long x = 0; x < w; ++x)
            img.at(int(x), int(y)) =
                std::uint16_t((unsigned(row[size_t(x) * 2]) << 8) | row[size_t(x) * 2 + 1]);
    }
    return img;
}

void write_ppm(const core::ColorImage& img, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!out) throw IoFailure("short write to " + path.string());
}

core::ColorImage read_ppm(const std::filesystem::path& path) {
    auto in = open_input(path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw CorruptImage("bad magic in " + path.string() + " (want P6)");
    const long w = read_pnm_int(in, path);
    const long h = read_pnm_int(in, path);
    const long maxval = read_pnm_int(in, path);
    if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16)
        throw CorruptImage("bad dimensions in " + path.string());
    if (maxval != 255)
        throw CorruptImage("bad maxval " + std::to_string(maxval) + " in " + path.string());
    in.get();

    core::ColorImage img{int(w), int(h)};
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (in.gcount() != std::streamsize(img.pixels.size()))
        throw CorruptImage("truncated pixel data in " + path.string());
    return img;
}

}  // namespace pave3d::dataio
