#include "ttb/augmentation.hpp"

#include "ttb/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ttb {

std::size_t AugmentPlan::row_product() const {
    std::size_t p = 1;
    for (const auto& f : factors) p *= f.first;
    return p;
}

std::size_t AugmentPlan::col_product() const {
    std::size_t p = 1;
    for (const auto& f : factors) p *= f.second;
    return p;
}

Dims AugmentPlan::output_dims() const {
    Dims d;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto [m, n] = factors[i];
        d.push_back(i == 0 && mode == AugmentMode::padded_overlap ? (m + 1) * (n + 1) : m * n);
    }
    if (channels > 1) d.push_back(channels);
    return d;
}

Dims AugmentPlan::image_dims() const {
    if (channels > 1) return {rows, cols, channels};
    return {rows, cols};
}

void AugmentPlan::validate() const {
    if (factors.empty()) throw std::invalid_argument("augment plan needs at least one factor pair");
    for (const auto& [m, n] : factors)
        if (m == 0 || n == 0) throw std::invalid_argument("augment factors must be positive");
    if (channels == 0) throw std::invalid_argument("channels must be >= 1");
    if (rows == 0 || cols == 0) throw std::invalid_argument("augment plan image size must be positive");
    if (mode == AugmentMode::basic) {
        if (row_product() != rows || col_product() != cols)
            throw ShapeError("basic augmentation needs prod M_i = rows and prod N_i = cols");
    } else if (row_product() < rows + 1 || col_product() < cols + 1) {
        throw ShapeError("padded augmentation needs prod M_i >= rows + 1 and prod N_i >= cols + 1");
    }
}

AugmentPlan make_plan(std::vector<std::pair<std::size_t, std::size_t>> factors, AugmentMode mode,
                      std::size_t channels) {
    AugmentPlan p;
    p.factors = std::move(factors);
    p.mode = mode;
    p.channels = channels;
    const std::size_t shrink = mode == AugmentMode::padded_overlap ? 1 : 0;
    p.rows = p.row_product() - shrink;
    p.cols = p.col_product() - shrink;
    p.validate();
    return p;
}

namespace {

struct Radix {
    std::vector<std::size_t> m, n;
};

// Mixed-radix digits of the folded positions: factors [first, end).
Radix radix(const AugmentPlan& plan, std::size_t first) {
    Radix r;
    for (std::size_t i = first; i < plan.factors.size(); ++i) {
        r.m.push_back(plan.factors[i].first);
        r.n.push_back(plan.factors[i].second);
    }
    return r;
}

void check_image(const Dims& got, const AugmentPlan& plan) {
    if (got != plan.image_dims()) throw ShapeError("image dims do not match the augment plan");
}

}  // namespace

std::vector<std::size_t> augment_index_map(const AugmentPlan& plan) {
    plan.validate();
    const Dims out = plan.output_dims();
    const std::size_t total = num_elements(out);
    const bool padded = plan.mode == AugmentMode::padded_overlap;
    const std::size_t first = padded ? 1 : 0;
    const Radix rx = radix(plan, first);
    const std::size_t f = plan.factors.size();
    const std::size_t plane = plan.rows * plan.cols;

    std::vector<std::size_t> map(total);
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        std::size_t row = 0, col = 0;
        if (padded) {
            const std::size_t m1 = plan.factors[0].first;
            const std::size_t i1 = rest % out[0];
            rest /= out[0];
            row = i1 % (m1 + 1);
            col = i1 / (m1 + 1);
        }
        std::size_t rs = 1, cs = 1, grow = 0, gcol = 0;
        for (std::size_t i = 0; i < rx.m.size(); ++i) {
            const std::size_t d = out[first + i];
            const std::size_t idx = rest % d;
            rest /= d;
            grow += (idx % rx.m[i]) * rs;
            gcol += (idx / rx.m[i]) * cs;
            rs *= rx.m[i];
            cs *= rx.n[i];
        }
        const std::size_t ch = f < out.size() ? rest : 0;
        if (padded) {
            const std::size_t pr = grow * plan.factors[0].first + row;
            const std::size_t pc = gcol * plan.factors[0].second + col;
            row = std::min(pr == 0 ? 0 : pr - 1, plan.rows - 1);
            col = std::min(pc == 0 ? 0 : pc - 1, plan.cols - 1);
        } else {
            row = grow;
            col = gcol;
        }
        map[lin] = row + plan.rows * col + plane * ch;
    }
    return map;
}

std::vector<std::size_t> deaugment_index_map(const AugmentPlan& plan) {
    plan.validate();
    const Dims out = plan.output_dims();
    const bool padded = plan.mode == AugmentMode::padded_overlap;
    const std::size_t first = padded ? 1 : 0;
    const Radix rx = radix(plan, first);
    const std::size_t f = plan.factors.size();
    const std::size_t spatial = num_elements(std::span<const std::size_t>(out.data(), f));

    std::vector<std::size_t> map(plan.rows * plan.cols * plan.channels);
    for (std::size_t ch = 0; ch < plan.channels; ++ch)
        for (std::size_t c = 0; c < plan.cols; ++c)
            for (std::size_t r = 0; r < plan.rows; ++r) {
                std::size_t grow = r, gcol = c, lin = 0, stride = 1;
                if (padded) {
                    const std::size_t m1 = plan.factors[0].first, n1 = plan.factors[0].second;
                    grow = (r + 1) / m1;
                    gcol = (c + 1) / n1;
                    lin = (r + 1) % m1 + (m1 + 1) * ((c + 1) % n1);
                    stride = out[0];
                }
                for (std::size_t i = 0; i < rx.m.size(); ++i) {
                    const std::size_t idx = grow % rx.m[i] + rx.m[i] * (gcol % rx.n[i]);
                    grow /= rx.m[i];
                    gcol /= rx.n[i];
                    lin += idx * stride;
                    stride *= out[first + i];
                }
                map[r + plan.rows * (c + plan.cols * ch)] = lin + spatial * ch;
            }
    return map;
}

DenseTensor augment_basic(const DenseTensor& img, const AugmentPlan& plan) {
    if (plan.mode != AugmentMode::basic) throw std::invalid_argument("augment_basic needs a basic plan");
    return augment(img, plan);
}

DenseTensor augment_padded(const DenseTensor& img, const AugmentPlan& plan) {
    if (plan.mode != AugmentMode::padded_overlap) throw std::invalid_argument("augment_padded needs a padded plan");
    return augment(img, plan);
}

DenseTensor augment(const DenseTensor& img, const AugmentPlan& plan) {
    plan.validate();
    check_image(img.dims(), plan);
    const auto map = augment_index_map(plan);
    std::vector<double> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = img[map[i]];
    return DenseTensor(plan.output_dims(), std::move(out));
}

MaskTensor augment_mask(const MaskTensor& mask, const AugmentPlan& plan) {
    plan.validate();
    check_image(mask.dims(), plan);
    const auto map = augment_index_map(plan);
    std::vector<std::uint8_t> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = mask.bits()[map[i]];
    return MaskTensor(plan.output_dims(), std::move(out));
}

DenseTensor deaugment(const DenseTensor& t, const AugmentPlan& plan) {
    plan.validate();
    if (t.dims() != plan.output_dims()) throw ShapeError("tensor dims do not match the augment plan");
    const auto map = deaugment_index_map(plan);
    std::vector<double> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = t[map[i]];
    return DenseTensor(plan.image_dims(), std::move(out));
}

std::string to_string(AugmentMode m) { return m == AugmentMode::basic ? "basic" : "padded"; }

AugmentMode parse_augment_mode(const std::string& s) {
    if (s == "basic") return AugmentMode::basic;
    if (s == "padded" || s == "padded_overlap") return AugmentMode::padded_overlap;
    throw std::invalid_argument("unknown augment mode '" + s + "'");
}

std::string plan_to_json(const AugmentPlan& plan) {
    nlohmann::json j;
    j["factors"] = nlohmann::json::array();
    for (const auto& [m, n] : plan.factors) j["factors"].push_back({m, n});
    j["mode"] = to_string(plan.mode);
    j["channels"] = plan.channels;
    j["rows"] = plan.rows;
    j["cols"] = plan.cols;
    return j.dump(2);
}

AugmentPlan plan_from_json(const std::string& text) {
    AugmentPlan p;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& f : j.at("factors")) p.factors.emplace_back(f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>());
        p.mode = parse_augment_mode(j.value("mode", std::string("basic")));
        p.channels = j.value("channels", std::size_t{1});
        const std::size_t shrink = p.mode == AugmentMode::padded_overlap ? 1 : 0;
        p.rows = j.contains("rows") ? j.at("rows").get<std::size_t>() : p.row_product() - shrink;
        p.cols = j.contains("cols") ? j.at("cols").get<std::size_t>() : p.col_product() - shrink;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad augment plan: ") + e.what());
    }
    p.validate();
    return p;
}

void save_plan(const std::string& path, const AugmentPlan& plan) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot write " + path);
    f << plan_to_json(plan) << '\n';
}

AugmentPlan load_plan(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return plan_from_json(ss.str());
}

}  // namespace ttb
