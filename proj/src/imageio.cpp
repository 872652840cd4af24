#include "faceid/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace faceid {

namespace {

struct ByteCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }
    int peek() const { return eof() ? -1 : bytes[pos]; }
    int get() { return eof() ? -1 : bytes[pos++]; }

    // Skip whitespace and '#' comment lines between header tokens.
    void skip_separators() {
        while (!eof()) {
            const int c = peek();
            if (std::isspace(c)) {
                ++pos;
            } else if (c == '#') {
                while (!eof() && get() != '\n') {
                }
            } else {
                break;
            }
        }
    }

    long next_int(const char* what) {
        skip_separators();
        if (eof() || !std::isdigit(peek()))
            throw BadHeader(std::string("pgm: expected integer for ") + what);
        long v = 0;
        while (!eof() && std::isdigit(peek())) {
            v = v * 10 + (get() - '0');
            if (v > 1000000000L) throw BadHeader(std::string("pgm: ") + what + " out of range");
        }
        return v;
    }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes, const std::string& source_id) {
    if (bytes.size() < 2) throw BadMagic("pgm: too short for magic");
    const char m0 = static_cast<char>(bytes[0]);
    const char m1 = static_cast<char>(bytes[1]);
    if (m0 != 'P' || (m1 != '5' && m1 != '2'))
        throw BadMagic(std::string("pgm: unsupported magic \"") + m0 + m1 + "\"");
    const bool binary = m1 == '5';

    ByteCursor cur{bytes, 2};
    const long width = cur.next_int("width");
    const long height = cur.next_int("height");
    const long maxval = cur.next_int("maxval");
    if (width <= 0 || height <= 0) throw BadHeader("pgm: non-positive dimensions");
    if (maxval < 1 || maxval > 65535) throw BadHeader("pgm: maxval must be in [1,65535]");

    GrayImage img;
    img.source_id = source_id;
    img.pixels = Matrix(static_cast<std::size_t>(height), static_cast<std::size_t>(width));
    const std::size_t count = img.pixels.size();
    const double inv = 1.0 / static_cast<double>(maxval);

    if (binary) {
        // Exactly one whitespace byte separates maxval from the raster.
        if (cur.eof() || !std::isspace(cur.peek())) throw BadHeader("pgm: missing raster separator");
        cur.get();
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        if (bytes.size() - cur.pos < count * bytes_per)
            throw TruncatedData("pgm: raster shorter than header promises");
        double* px = img.pixels.data();
        for (std::size_t i = 0; i < count; ++i) {
            unsigned v = bytes[cur.pos++];
            if (bytes_per == 2) v = (v << 8) | bytes[cur.pos++];
            if (v > static_cast<unsigned>(maxval)) throw TruncatedData("pgm: sample exceeds maxval");
            px[i] = static_cast<double>(v) * inv;
        }
    } else {
        double* px = img.pixels.data();
        for (std::size_t i = 0; i < count; ++i) {
            cur.skip_separators();
            if (cur.eof()) throw TruncatedData("pgm: ASCII raster ended early");
            const long v = cur.next_int("sample");
            if (v > maxval) throw TruncatedData("pgm: sample exceeds maxval");
            px[i] = static_cast<double>(v) * inv;
        }
    }
    return img;
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    std::ostringstream header;
    header << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(out.size() + img.pixels.size());
    for (double v : img.pixels.values()) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
    }
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open image file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_pgm(bytes, path.string());
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
    const auto bytes = write_pgm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFile("cannot write image file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_h, std::size_t out_w) {
    if (out_h < 1 || out_w < 1) throw ConfigError("resize: output dims must be >= 1");
    const std::size_t in_h = img.height();
    const std::size_t in_w = img.width();
    if (in_h == out_h && in_w == out_w) return img;

    GrayImage out;
    out.source_id = img.source_id;
    out.pixels = Matrix(out_h, out_w);

    const double sy = out_h > 1 ? static_cast<double>(in_h - 1) / static_cast<double>(out_h - 1)
                                : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(in_w - 1) / static_cast<double>(out_w - 1)
                                : 0.0;
    for (std::size_t r = 0; r < out_h; ++r) {
        const double fy = out_h > 1 ? sy * static_cast<double>(r)
                                    : 0.5 * static_cast<double>(in_h - 1);
        std::size_t y0 = static_cast<std::size_t>(fy);
        if (y0 + 1 >= in_h) y0 = in_h >= 2 ? in_h - 2 : 0;
        const std::size_t y1 = std::min(y0 + 1, in_h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t c = 0; c < out_w; ++c) {
            const double fx = out_w > 1 ? sx * static_cast<double>(c)
                                        : 0.5 * static_cast<double>(in_w - 1);
            std::size_t x0 = static_cast<std::size_t>(fx);
            if (x0 + 1 >= in_w) x0 = in_w >= 2 ? in_w - 2 : 0;
            const std::size_t x1 = std::min(x0 + 1, in_w - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = img.pixels(y0, x0) * (1.0 - wx) + img.pixels(y0, x1) * wx;
            const double bot = img.pixels(y1, x0) * (1.0 - wx) + img.pixels(y1, x1) * wx;
            out.pixels(r, c) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

Dataset load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open manifest: " + path.string());
    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");

    std::string line;
    std::size_t lineno = 0;
    std::size_t target_h = 0, target_w = 0;

    // Pragma line.
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("#dims=", 0) != 0)
            throw ParseError("manifest line " + std::to_string(lineno) +
                             ": expected leading pragma #dims=H,W");
        unsigned long h = 0, w = 0;
        char comma = 0;
        std::istringstream ps(t.substr(6));
        if (!(ps >> h >> comma >> w) || comma != ',' || h == 0 || w == 0)
            throw ParseError("manifest line " + std::to_string(lineno) + ": bad #dims pragma");
        target_h = h;
        target_w = w;
        break;
    }
    if (target_h == 0) throw ParseError("manifest: missing #dims pragma");

    // Header row.
    bool has_weight = false;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto fields = split_csv(t);
        if (fields.size() < 2 || fields[0] != "path" || fields[1] != "label")
            throw ParseError("manifest line " + std::to_string(lineno) +
                             ": expected header path,label[,weight]");
        if (fields.size() >= 3) {
            if (fields[2] != "weight")
                throw ParseError("manifest line " + std::to_string(lineno) +
                                 ": third header column must be weight");
            has_weight = true;
        }
        saw_header = true;
        break;
    }
    if (!saw_header) throw ParseError("manifest: missing header row");

    Dataset ds;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto fields = split_csv(t);
        const std::size_t want = has_weight ? 3 : 2;
        if (fields.size() != want)
            throw ParseError("manifest line " + std::to_string(lineno) + ": expected " +
                             std::to_string(want) + " fields, got " +
                             std::to_string(fields.size()));

        WeightedSample sample;
        try {
            sample.label = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw UnknownLabel("manifest line " + std::to_string(lineno) + ": bad label \"" +
                               fields[1] + "\"");
        }
        if (sample.label < 0)
            throw UnknownLabel("manifest line " + std::to_string(lineno) + ": negative label");

        if (has_weight) {
            try {
                sample.weight = std::stod(fields[2]);
            } catch (const std::exception&) {
                throw ParseError("manifest line " + std::to_string(lineno) + ": bad weight \"" +
                                 fields[2] + "\"");
            }
            if (!std::isfinite(sample.weight) || sample.weight < 0.0)
                throw ParseError("manifest line " + std::to_string(lineno) +
                                 ": weight must be finite and >= 0");
        }

        std::filesystem::path img_path(fields[0]);
        if (img_path.is_relative()) img_path = base / img_path;
        if (!std::filesystem::exists(img_path))
            throw MissingFile("manifest line " + std::to_string(lineno) + ": image not found: " +
                              img_path.string());
        sample.image = resize_bilinear(load_pgm(img_path), target_h, target_w);
        max_label = std::max(max_label, sample.label);
        ds.samples.push_back(std::move(sample));
    }

    if (ds.samples.empty()) throw ParseError("manifest: no data rows");
    ds.class_count = static_cast<std::size_t>(max_label) + 1;
    double wsum = 0.0;
    for (const auto& s : ds.samples) wsum += s.weight;
    if (wsum <= 0.0) throw DegenerateData("manifest: total sample weight is zero");
    return ds;
}

} // namespace faceid
