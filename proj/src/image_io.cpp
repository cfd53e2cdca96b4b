#include "ttb/image_io.hpp"

#include "ttb/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace ttb {

namespace {

void skip_space(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

std::size_t read_header_int(std::istream& in, const std::string& path) {
    skip_space(in);
    long v = -1;
    if (!(in >> v) || v <= 0) throw FormatError("bad image header in " + path);
    return static_cast<std::size_t>(v);
}

}  // namespace

bool is_image_path(const std::string& path) {
    if (path.size() < 4) return false;
    std::string ext = path.substr(path.size() - 4);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".ppm";
}

DenseTensor read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path);
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw FormatError(path + ": expected binary PGM (P5) or PPM (P6)");
    const std::size_t channels = magic[1] == '5' ? 1 : 3;
    const std::size_t cols = read_header_int(in, path);
    const std::size_t rows = read_header_int(in, path);
    const std::size_t maxval = read_header_int(in, path);
    if (maxval > 255) throw FormatError(path + ": only 8-bit images are supported");
    in.get();

    std::vector<unsigned char> raw(rows * cols * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw FormatError(path + ": truncated pixel data");

    DenseTensor img(channels == 1 ? Dims{rows, cols} : Dims{rows, cols, channels});
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t ch = 0; ch < channels; ++ch)
                img[r + rows * (c + cols * ch)] = raw[(r * cols + c) * channels + ch] * scale;
    return img;
}

void write_image(const std::string& path, const DenseTensor& img) {
    const bool gray = img.order() == 2;
    if (!gray && !(img.order() == 3 && img.dim(2) == 3))
        throw ShapeError("write_image expects (rows, cols) or (rows, cols, 3)");
    const std::size_t rows = img.dim(0), cols = img.dim(1), channels = gray ? 1 : 3;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << (gray ? "P5" : "P6") << '\n' << cols << ' ' << rows << "\n255\n";
    std::vector<unsigned char> raw(rows * cols * channels);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const double v = std::clamp(img[r + rows * (c + cols * ch)], 0.0, 1.0);
                raw[(r * cols + c) * channels + ch] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw FormatError("write failed for " + path);
}

}  // namespace ttb
