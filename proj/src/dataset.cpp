#include "floweval/dataset.hpp"

#include "floweval/geometry.hpp"
#include "floweval/npy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>

namespace floweval {

using nlohmann::json;

Dataset Dataset::make(std::vector<Sample> samples, Provenance provenance) {
    if (samples.empty()) raise(ErrorCode::InvalidArgument, "dataset has no samples");
    std::set<std::string> ids;
    for (const Sample& s : samples) {
        if (!ids.insert(s.id).second)
            raise(ErrorCode::InvalidArgument, "duplicate sample id " + s.id);
        if (!(s.grid() == samples.front().grid()))
            raise(ErrorCode::ShapeMismatch, "sample " + s.id + " is on a different grid");
    }
    return Dataset{std::move(samples), std::move(provenance)};
}

const Sample* Dataset::find(const std::string& id) const {
    for (const Sample& s : samples)
        if (s.id == id) return &s;
    return nullptr;
}

std::string to_string(SplitProtocol protocol) {
    switch (protocol) {
        case SplitProtocol::Random: return "random";
        case SplitProtocol::Extrapolatory: return "extrapolatory";
        case SplitProtocol::Subset: return "subset";
    }
    return "random";
}

SplitProtocol split_protocol_from_string(const std::string& name) {
    if (name == "random") return SplitProtocol::Random;
    if (name == "extrapolatory") return SplitProtocol::Extrapolatory;
    if (name == "subset") return SplitProtocol::Subset;
    raise(ErrorCode::ParseError, "unknown split protocol '" + name + "'");
}

void save_split(const std::filesystem::path& path, const SplitResult& split) {
    json j;
    j["protocol"] = to_string(split.protocol);
    j["seed"] = split.seed;
    j["parameters"] = split.parameters;
    if (split.base_protocol) j["base_protocol"] = *split.base_protocol;
    j["train_ids"] = split.train_ids;
    j["test_ids"] = split.test_ids;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::IoError, "cannot write " + path.string());
    f << j.dump(2) << "\n";
}

SplitResult load_split(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, "bad split file " + path.string() + ": " + e.what());
    }
    try {
        SplitResult s;
        s.protocol = split_protocol_from_string(j.at("protocol").get<std::string>());
        s.seed = j.at("seed").get<std::uint64_t>();
        s.parameters = j.value("parameters", std::map<std::string, double>{});
        if (j.contains("base_protocol"))
            s.base_protocol = j["base_protocol"].get<std::string>();
        s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
        return s;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, "bad split file " + path.string() + ": " + e.what());
    }
}

namespace {

std::vector<std::string> sorted_ids(const Dataset& dataset) {
    std::vector<std::string> ids;
    ids.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void shuffle_ids(std::vector<std::string>& ids, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = ids.size(); i-- > 1;)
        std::swap(ids[i], ids[rng.next() % (i + 1)]);
}

} // namespace

SplitResult random_split(const Dataset& dataset, double test_fraction,
                         std::uint64_t seed) {
    if (!(0.0 < test_fraction && test_fraction < 1.0))
        raise(ErrorCode::InvalidArgument, "test fraction must be in (0, 1)");
    std::vector<std::string> ids = sorted_ids(dataset);
    shuffle_ids(ids, seed);
    const auto n_test =
        static_cast<std::size_t>(std::floor(ids.size() * test_fraction));

    SplitResult s;
    s.protocol = SplitProtocol::Random;
    s.seed = seed;
    s.parameters["test_fraction"] = test_fraction;
    s.test_ids.assign(ids.begin(), ids.begin() + n_test);
    s.train_ids.assign(ids.begin() + n_test, ids.end());
    std::sort(s.test_ids.begin(), s.test_ids.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    return s;
}

SplitResult extrapolatory_split(const Dataset& dataset, double tail_fraction,
                                bool span_based) {
    if (!(0.0 < tail_fraction && tail_fraction < 0.5))
        raise(ErrorCode::InvalidArgument, "tail fraction must be in (0, 0.5)");

    std::vector<std::pair<double, std::string>> by_re;
    by_re.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) by_re.emplace_back(s.re, s.id);
    std::sort(by_re.begin(), by_re.end());
    const std::size_t n = by_re.size();

    SplitResult s;
    s.protocol = SplitProtocol::Extrapolatory;
    s.parameters["tail_fraction"] = tail_fraction;
    s.parameters["span_based"] = span_based ? 1.0 : 0.0;

    if (span_based) {
        const double re_min = by_re.front().first;
        const double re_max = by_re.back().first;
        const double lo_cut = re_min + tail_fraction * (re_max - re_min);
        const double hi_cut = re_max - tail_fraction * (re_max - re_min);
        for (const auto& [re, id] : by_re) {
            if (re <= lo_cut || re >= hi_cut)
                s.test_ids.push_back(id);
            else
                s.train_ids.push_back(id);
        }
    } else {
        const auto k = static_cast<std::size_t>(std::ceil(n * tail_fraction));
        const std::size_t hi_begin = std::max(k, n - k);
        for (std::size_t idx = 0; idx < n; ++idx) {
            if (idx < k || idx >= hi_begin)
                s.test_ids.push_back(by_re[idx].second);
            else
                s.train_ids.push_back(by_re[idx].second);
        }
    }
    std::sort(s.test_ids.begin(), s.test_ids.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    return s;
}

SplitResult subsample(const SplitResult& split, std::size_t n_train,
                      std::uint64_t seed) {
    if (n_train > split.train_ids.size())
        raise(ErrorCode::SubsetTooLarge,
              "requested " + std::to_string(n_train) + " train ids, have " +
                  std::to_string(split.train_ids.size()));
    std::vector<std::string> ids = split.train_ids;
    std::sort(ids.begin(), ids.end());
    shuffle_ids(ids, seed);
    ids.resize(n_train);
    std::sort(ids.begin(), ids.end());

    SplitResult s;
    s.protocol = SplitProtocol::Subset;
    s.seed = seed;
    s.parameters["n_train"] = static_cast<double>(n_train);
    s.base_protocol = split.base_protocol ? *split.base_protocol
                                          : to_string(split.protocol);
    s.train_ids = std::move(ids);
    s.test_ids = split.test_ids;
    std::sort(s.test_ids.begin(), s.test_ids.end());
    return s;
}

SplitResult subsample_stratified(const SplitResult& split, const Dataset& dataset,
                                 std::size_t n_train, std::uint64_t seed) {
    if (n_train > split.train_ids.size())
        raise(ErrorCode::SubsetTooLarge, "subset exceeds train size");
    std::map<std::string, std::vector<std::string>> groups;
    for (const std::string& id : split.train_ids) {
        const Sample* s = dataset.find(id);
        if (!s) raise(ErrorCode::InvalidArgument, "split id " + id + " not in dataset");
        groups[s->category.value_or("")].push_back(id);
    }
    const std::size_t n_groups = groups.size();
    const std::size_t base = n_train / n_groups;
    std::size_t remainder = n_train % n_groups;

    SplitResult out;
    out.protocol = SplitProtocol::Subset;
    out.seed = seed;
    out.parameters["n_train"] = static_cast<double>(n_train);
    out.parameters["stratified"] = 1.0;
    out.base_protocol =
        split.base_protocol ? *split.base_protocol : to_string(split.protocol);
    out.test_ids = split.test_ids;
    std::sort(out.test_ids.begin(), out.test_ids.end());

    for (auto& [category, ids] : groups) {
        std::size_t want = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0) --remainder;
        if (want > ids.size())
            raise(ErrorCode::SubsetTooLarge,
                  "category '" + category + "' has only " +
                      std::to_string(ids.size()) + " train samples, needs " +
                      std::to_string(want));
        std::sort(ids.begin(), ids.end());
        shuffle_ids(ids, seed);
        ids.resize(want);
        out.train_ids.insert(out.train_ids.end(), ids.begin(), ids.end());
    }
    std::sort(out.train_ids.begin(), out.train_ids.end());
    return out;
}

// -- canonical archive ---------------------------------------------------

namespace {

std::vector<float> narrow_to_f32(const std::vector<double>& values) {
    std::vector<float> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        out[k] = static_cast<float>(values[k]);
    return out;
}

std::vector<double> widen_f32(std::span<const char> bytes, const std::string& name) {
    if (bytes.size() % 4 != 0)
        raise(ErrorCode::ShapeMismatch, "tensor " + name + " is not float32-sized");
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t k = 0; k < out.size(); ++k) {
        float v;
        std::memcpy(&v, bytes.data() + 4 * k, 4);
        out[k] = v;
    }
    return out;
}

struct RawDirectory {
    // name -> bytes, from either a directory tree or a zip
    std::map<std::string, std::vector<char>> files;
    std::string format;
};

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RawDirectory open_container(const std::filesystem::path& path) {
    RawDirectory raw;
    if (std::filesystem::is_directory(path)) {
        raw.format = "canonical-dir";
        for (const auto& entry : std::filesystem::directory_iterator(path))
            if (entry.is_regular_file())
                raw.files[entry.path().filename().string()] = slurp(entry.path());
    } else {
        raw.format = "canonical-zip";
        for (auto& e : npy::read_zip(path)) raw.files[e.name] = std::move(e.data);
    }
    return raw;
}

json parse_manifest(const RawDirectory& raw, const std::filesystem::path& path) {
    const auto it = raw.files.find("manifest.json");
    if (it == raw.files.end())
        raise(ErrorCode::ParseError, "no manifest.json in " + path.string());
    try {
        return json::parse(it->second.begin(), it->second.end());
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError,
              "bad manifest.json in " + path.string() + ": " + e.what());
    }
}

Grid grid_from_json(const json& j) {
    try {
        return Grid::make(j.at("nx").get<int>(), j.at("ny").get<int>(),
                          j.at("x0").get<double>(), j.at("x1").get<double>(),
                          j.at("y0").get<double>(), j.at("y1").get<double>());
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad grid in manifest: ") + e.what());
    }
}

json grid_to_json(const Grid& g) {
    return json{{"nx", g.nx}, {"ny", g.ny}, {"x0", g.x0},
                {"x1", g.x1}, {"y0", g.y0}, {"y1", g.y1}};
}

const std::vector<char>& tensor_bytes(const RawDirectory& raw, const std::string& file,
                                      const Grid& grid, std::size_t elem_size) {
    const auto it = raw.files.find(file);
    if (it == raw.files.end())
        raise(ErrorCode::MissingChannel, "tensor file " + file + " not in archive");
    if (it->second.size() != grid.size() * elem_size)
        raise(ErrorCode::ShapeMismatch,
              "tensor " + file + " has " + std::to_string(it->second.size()) +
                  " bytes, expected " + std::to_string(grid.size() * elem_size));
    return it->second;
}

ScalarField load_f32_field(const RawDirectory& raw, const std::string& file,
                           const Grid& grid) {
    auto values = widen_f32(tensor_bytes(raw, file, grid, 4), file);
    for (double v : values)
        if (!std::isfinite(v))
            raise(ErrorCode::NonFiniteData, "tensor " + file + " contains NaN or Inf");
    return ScalarField::make(grid, std::move(values));
}

std::string tensor_file(const json& tensors, const char* key) {
    if (!tensors.contains(key))
        raise(ErrorCode::MissingChannel, std::string("sample lacks tensor '") + key + "'");
    return tensors[key].get<std::string>();
}

Dataset load_canonical(const std::filesystem::path& path, const LoadOptions& options) {
    const RawDirectory raw = open_container(path);
    const json manifest = parse_manifest(raw, path);
    const Grid grid = grid_from_json(manifest.at("grid"));

    std::vector<Sample> samples;
    for (const json& js : manifest.at("samples")) {
        const auto id = js.at("id").get<std::string>();
        const double re = js.at("re").get<double>();
        std::optional<std::string> category;
        if (js.contains("category") && !js["category"].is_null())
            category = js["category"].get<std::string>();

        if (options.metadata_only) {
            // placeholder fields keep the Sample invariants intact
            samples.push_back(Sample::make(
                id, re, std::nullopt,
                SignedDistanceField::make(grid, std::vector<double>(grid.size(), grid.h)),
                FlowField::zeros(grid), category));
            continue;
        }

        const json& tensors = js.at("tensors");
        std::optional<GeometryMask> mask;
        std::optional<SignedDistanceField> sdf;
        if (tensors.contains("mask")) {
            const auto& bytes =
                tensor_bytes(raw, tensors["mask"].get<std::string>(), grid, 1);
            std::vector<std::uint8_t> m(bytes.begin(), bytes.end());
            for (auto v : m)
                if (v > 1)
                    raise(ErrorCode::ParseError, "mask of sample " + id + " is not binary");
            mask = GeometryMask::make(grid, std::move(m));
        }
        if (tensors.contains("sdf"))
            sdf = SignedDistanceField::make(
                grid, load_f32_field(raw, tensors["sdf"].get<std::string>(), grid).values);
        if (!mask && !sdf)
            raise(ErrorCode::MissingChannel, "sample " + id + " has neither mask nor sdf");

        FlowField truth = FlowField::make(
            load_f32_field(raw, tensor_file(tensors, "u"), grid),
            load_f32_field(raw, tensor_file(tensors, "v"), grid),
            load_f32_field(raw, tensor_file(tensors, "p"), grid));
        samples.push_back(Sample::make(id, re, std::move(mask), std::move(sdf),
                                       std::move(truth), category));
    }
    return Dataset::make(std::move(samples), Provenance{path.string(), raw.format});
}

// -- npz archive ---------------------------------------------------------

struct NpzTensor {
    npy::NpyArray array;
    std::vector<double> values;
    std::size_t n, c, h, w;
};

NpzTensor load_npz_tensor(std::map<std::string, npy::NpyArray>& arrays,
                          const std::string& name, const std::filesystem::path& path) {
    const auto it = arrays.find(name);
    if (it == arrays.end())
        raise(ErrorCode::MissingChannel,
              "array '" + name + "' not found in " + path.string());
    NpzTensor t{std::move(it->second), {}, 0, 0, 0, 0};
    if (t.array.shape.size() != 4)
        raise(ErrorCode::ShapeMismatch, "array '" + name + "' must be [N, C, H, W], got " +
                                            std::to_string(t.array.shape.size()) +
                                            " dimensions");
    t.n = t.array.shape[0];
    t.c = t.array.shape[1];
    t.h = t.array.shape[2];
    t.w = t.array.shape[3];
    t.values = t.array.as_doubles();
    return t;
}

std::vector<double> npz_channel(const NpzTensor& t, std::size_t sample, int channel,
                                const std::string& what) {
    if (channel < 0 || static_cast<std::size_t>(channel) >= t.c)
        raise(ErrorCode::MissingChannel,
              what + " channel " + std::to_string(channel) + " out of range (C=" +
                  std::to_string(t.c) + ")");
    const std::size_t plane = t.h * t.w;
    const std::size_t begin = (sample * t.c + channel) * plane;
    return {t.values.begin() + begin, t.values.begin() + begin + plane};
}

std::string npz_sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%06zu", index);
    return buf;
}

double collapse_re(const std::vector<double>& values, const std::string& id) {
    const double re = values.front();
    for (double v : values)
        if (std::abs(v - re) > 1e-6 * std::abs(re))
            raise(ErrorCode::ParseError,
                  "Re channel of " + id + " is not constant (broadcast expected)");
    return re;
}

GeometryMask binarize_mask(const Grid& grid, const std::vector<double>& values,
                           const std::string& id) {
    std::vector<std::uint8_t> m(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (std::abs(values[k]) < 1e-9)
            m[k] = 0;
        else if (std::abs(values[k] - 1.0) < 1e-9)
            m[k] = 1;
        else
            raise(ErrorCode::ParseError, "mask channel of " + id + " is not binary");
    }
    return GeometryMask::make(grid, std::move(m));
}

ScalarField finite_field(const Grid& grid, std::vector<double> values,
                         const std::string& what) {
    for (double v : values)
        if (!std::isfinite(v))
            raise(ErrorCode::NonFiniteData, what + " contains NaN or Inf");
    return ScalarField::make(grid, std::move(values));
}

Dataset load_npz(const std::filesystem::path& path, const LoadOptions& options) {
    const ChannelMap& map = options.mapping;
    auto arrays = npy::read_npz(path);
    NpzTensor in = load_npz_tensor(arrays, map.input_array, path);
    NpzTensor out = load_npz_tensor(arrays, map.output_array, path);
    if (in.n != out.n)
        raise(ErrorCode::ShapeMismatch, "input holds " + std::to_string(in.n) +
                                            " samples, output " + std::to_string(out.n));
    if (in.h != out.h || in.w != out.w)
        raise(ErrorCode::ShapeMismatch, "input and output field shapes differ");

    const Grid grid = Grid::make(static_cast<int>(in.w), static_cast<int>(in.h), map.x0,
                                 map.x1, map.y0, map.y1);
    std::vector<Sample> samples;
    for (std::size_t s = 0; s < in.n; ++s) {
        const std::string id = npz_sample_id(s);
        const double re =
            collapse_re(npz_channel(in, s, map.re_channel, "re"), id);

        std::optional<GeometryMask> mask;
        std::optional<SignedDistanceField> sdf;
        const auto geom = npz_channel(in, s, map.geometry_channel, "geometry");
        if (map.geometry_kind == "mask")
            mask = binarize_mask(grid, geom, id);
        else if (map.geometry_kind == "sdf")
            sdf = SignedDistanceField::make(grid, geom);
        else
            raise(ErrorCode::InvalidArgument,
                  "geometry_kind must be 'sdf' or 'mask', got '" + map.geometry_kind + "'");

        FlowField truth = FlowField::make(
            finite_field(grid, npz_channel(out, s, map.u_channel, "u"), id + " u"),
            finite_field(grid, npz_channel(out, s, map.v_channel, "v"), id + " v"),
            finite_field(grid, npz_channel(out, s, map.p_channel, "p"), id + " p"));
        samples.push_back(
            Sample::make(id, re, std::move(mask), std::move(sdf), std::move(truth)));
    }
    return Dataset::make(std::move(samples), Provenance{path.string(), "npz"});
}

bool is_canonical(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) return true;
    for (const auto& e : npy::read_zip(path))
        if (e.name == "manifest.json") return true;
    return false;
}

} // namespace

Dataset load_archive(const std::filesystem::path& path, const LoadOptions& options) {
    if (!std::filesystem::exists(path))
        raise(ErrorCode::IoError, "archive not found: " + path.string());
    if (is_canonical(path)) return load_canonical(path, options);
    return load_npz(path, options);
}

void write_archive(const std::filesystem::path& path, const Dataset& dataset) {
    const Grid& grid = dataset.grid();
    json manifest;
    manifest["version"] = 1;
    manifest["grid"] = grid_to_json(grid);
    manifest["samples"] = json::array();

    std::vector<npy::ZipEntry> entries;
    const auto add_f32 = [&](const std::string& name, const std::vector<double>& values) {
        const auto f = narrow_to_f32(values);
        std::vector<char> bytes(f.size() * 4);
        std::memcpy(bytes.data(), f.data(), bytes.size());
        entries.push_back({name, std::move(bytes)});
    };

    for (const Sample& s : dataset.samples) {
        json js;
        js["id"] = s.id;
        js["re"] = s.re;
        if (s.category) js["category"] = *s.category;
        json tensors;
        if (s.mask) {
            const std::string name = s.id + ".mask.u8";
            entries.push_back(
                {name, std::vector<char>(s.mask->values.begin(), s.mask->values.end())});
            tensors["mask"] = name;
        }
        if (s.sdf) {
            const std::string name = s.id + ".sdf.f32";
            add_f32(name, s.sdf->values);
            tensors["sdf"] = name;
        }
        for (const auto& [key, field] :
             {std::pair{"u", &s.truth.u}, {"v", &s.truth.v}, {"p", &s.truth.p}}) {
            const std::string name = s.id + "." + key + ".f32";
            add_f32(name, field->values);
            tensors[key] = name;
        }
        js["tensors"] = tensors;
        manifest["samples"].push_back(js);
    }
    const std::string text = manifest.dump(2) + "\n";
    entries.insert(entries.begin(),
                   npy::ZipEntry{"manifest.json", {text.begin(), text.end()}});

    if (path.extension() == ".zip") {
        npy::write_zip(path, entries);
    } else {
        std::filesystem::create_directories(path);
        for (const auto& e : entries) {
            std::ofstream f(path / e.name, std::ios::binary | std::ios::trunc);
            if (!f) raise(ErrorCode::IoError, "cannot write " + (path / e.name).string());
            f.write(e.data.data(), static_cast<std::streamsize>(e.data.size()));
        }
    }
}

PredictionSet load_predictions(const std::filesystem::path& path,
                               const LoadOptions& options) {
    if (!std::filesystem::exists(path))
        raise(ErrorCode::IoError, "prediction archive not found: " + path.string());

    PredictionSet out;
    if (is_canonical(path)) {
        const RawDirectory raw = open_container(path);
        const json manifest = parse_manifest(raw, path);
        const Grid grid = grid_from_json(manifest.at("grid"));
        for (const json& js : manifest.at("samples")) {
            const auto id = js.at("id").get<std::string>();
            const json& tensors = js.at("tensors");
            out.ids.push_back(id);
            out.fields.push_back(FlowField::make(
                load_f32_field(raw, tensor_file(tensors, "u"), grid),
                load_f32_field(raw, tensor_file(tensors, "v"), grid),
                load_f32_field(raw, tensor_file(tensors, "p"), grid)));
        }
        return out;
    }

    const ChannelMap& map = options.mapping;
    auto arrays = npy::read_npz(path);
    NpzTensor pred = load_npz_tensor(arrays, map.output_array, path);
    const Grid grid = Grid::make(static_cast<int>(pred.w), static_cast<int>(pred.h),
                                 map.x0, map.x1, map.y0, map.y1);
    for (std::size_t s = 0; s < pred.n; ++s) {
        const std::string id = npz_sample_id(s);
        out.ids.push_back(id);
        out.fields.push_back(FlowField::make(
            finite_field(grid, npz_channel(pred, s, map.u_channel, "u"), id + " u"),
            finite_field(grid, npz_channel(pred, s, map.v_channel, "v"), id + " v"),
            finite_field(grid, npz_channel(pred, s, map.p_channel, "p"), id + " p")));
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& preds,
                       const Grid& grid) {
    if (preds.ids.size() != preds.fields.size())
        raise(ErrorCode::LengthMismatch, "prediction ids and fields differ in length");
    json manifest;
    manifest["version"] = 1;
    manifest["grid"] = grid_to_json(grid);
    manifest["samples"] = json::array();

    std::vector<npy::ZipEntry> entries;
    for (std::size_t k = 0; k < preds.ids.size(); ++k) {
        const std::string& id = preds.ids[k];
        json js;
        js["id"] = id;
        json tensors;
        for (const auto& [key, field] : {std::pair{"u", &preds.fields[k].u},
                                         {"v", &preds.fields[k].v},
                                         {"p", &preds.fields[k].p}}) {
            const std::string name = id + "." + key + ".f32";
            const auto f = narrow_to_f32(field->values);
            std::vector<char> bytes(f.size() * 4);
            std::memcpy(bytes.data(), f.data(), bytes.size());
            entries.push_back({name, std::move(bytes)});
            tensors[key] = name;
        }
        js["tensors"] = tensors;
        manifest["samples"].push_back(js);
    }
    const std::string text = manifest.dump(2) + "\n";
    entries.insert(entries.begin(),
                   npy::ZipEntry{"manifest.json", {text.begin(), text.end()}});

    if (path.extension() == ".zip") {
        npy::write_zip(path, entries);
    } else {
        std::filesystem::create_directories(path);
        for (const auto& e : entries) {
            std::ofstream f(path / e.name, std::ios::binary | std::ios::trunc);
            if (!f) raise(ErrorCode::IoError, "cannot write " + (path / e.name).string());
            f.write(e.data.data(), static_cast<std::streamsize>(e.data.size()));
        }
    }
}

// -- manufactured samples -------------------------------------------------

namespace {

struct Closures {
    std::function<double(double, double)> u, v, p, sdf;
};

double node_mean(const Grid& g, const std::function<bool(double, double)>& in_region,
                 const std::function<double(double, double)>& f, std::size_t* count_out) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            if (!in_region(x, y)) continue;
            acc += f(x, y);
            ++count;
        }
    if (count_out) *count_out = count;
    return count ? acc / static_cast<double>(count) : 0.0;
}

} // namespace

ManufacturedSample manufactured_sample(ManufacturedKind kind, const Grid& grid,
                                       double re, const EvalConfig& config) {
    config.validate();
    if (!(re > 0.0)) raise(ErrorCode::InvalidArgument, "Re must be positive");
    const double lx = grid.x1 - grid.x0;
    const double ly = grid.y1 - grid.y0;
    const double pi = std::numbers::pi;

    Closures c;
    std::string id;
    std::optional<double> m1_limit, m2_limit, m3_truth_limit;

    switch (kind) {
        case ManufacturedKind::PolynomialShear: {
            id = "shear";
            c.u = [&](double, double y) { return y - grid.y0; };
            c.v = [](double, double) { return 0.0; };
            c.p = [](double, double) { return 0.0; };
            // geometry-free: positive ramp, eikonal-clean, reaches the band
            c.sdf = [&](double, double y) { return (y - grid.y0) + 0.05 * ly; };
            const double w_u = config.channels.u ? 1.0 / config.channels.count() : 0.0;
            m1_limit = w_u * ly * ly / 3.0;
            m3_truth_limit = 0.0;
            break;
        }
        case ManufacturedKind::RadialDisc: {
            id = "radial_disc";
            const double cx = 0.5 * (grid.x0 + grid.x1);
            const double cy = 0.5 * (grid.y0 + grid.y1);
            const double radius = 0.27 * std::min(lx, ly);
            c.sdf = [=](double x, double y) { return std::hypot(x - cx, y - cy) - radius; };
            c.u = [=](double x, double y) {
                return std::max(std::hypot(x - cx, y - cy) - radius, 0.0);
            };
            c.v = c.u;
            c.p = [](double, double) { return 0.0; };

            const double w_ch =
                (double(config.channels.u) + double(config.channels.v)) /
                config.channels.count();
            if (std::abs(lx - ly) < 1e-12 * lx) {
                // closed forms over a centered square of side L minus the disc
                const double L = lx, R = radius;
                const double K = std::numbers::sqrt2 + std::log(1.0 + std::numbers::sqrt2);
                const double int_square =
                    L * L * L * L / 6.0 - 2.0 * R * (L * L * L / 6.0) * K + R * R * L * L;
                const double int_disc = pi * R * R * R * R / 6.0;
                m1_limit = w_ch * (int_square - int_disc) / (L * L - pi * R * R);
                const double lo = config.band_lo, hi = config.band_hi;
                if (R + hi <= 0.5 * L) { // annulus fully inside the domain
                    const double num = 2.0 * (R * (hi * hi * hi - lo * lo * lo) / 3.0 +
                                              (hi * hi * hi * hi - lo * lo * lo * lo) / 4.0);
                    const double den =
                        (R + hi) * (R + hi) - (R + lo) * (R + lo);
                    m2_limit = w_ch * num / den;
                }
            }
            break;
        }
        case ManufacturedKind::ProductSine: {
            id = "product_sine";
            const auto sx = [=](double x) { return std::sin(pi * (x - grid.x0) / lx); };
            const auto sy = [=](double y) { return std::sin(pi * (y - grid.y0) / ly); };
            const auto cxf = [=](double x) { return std::cos(pi * (x - grid.x0) / lx); };
            const auto cyf = [=](double y) { return std::cos(pi * (y - grid.y0) / ly); };
            c.u = [=](double x, double y) { return sx(x) * sy(y); };
            c.v = [=](double x, double y) { return cxf(x) * cyf(y); };
            c.p = [](double, double) { return 0.0; };
            c.sdf = [&](double, double y) { return (y - grid.y0) + 0.05 * ly; };
            const double w_ch =
                (double(config.channels.u) + double(config.channels.v)) /
                config.channels.count();
            m1_limit = w_ch * 0.25;
            if (std::abs(lx - ly) < 1e-12 * lx) {
                const double L = lx;
                const double eta = viscosity(re);
                m3_truth_limit = pi * pi / (4.0 * L * L) +
                                 2.0 * eta * eta * pi * pi * pi * pi / (L * L * L * L);
            }
            break;
        }
    }

    // node-evaluated expectations straight from the closures
    const auto zero_pred_sq = [&](double x, double y) {
        double acc = 0.0;
        if (config.channels.u) acc += c.u(x, y) * c.u(x, y);
        if (config.channels.v) acc += c.v(x, y) * c.v(x, y);
        if (config.channels.p) acc += c.p(x, y) * c.p(x, y);
        return acc / config.channels.count();
    };
    std::size_t n1 = 0, n2 = 0;
    const double m1_nodes = node_mean(
        grid, [&](double x, double y) { return c.sdf(x, y) > 0.0; }, zero_pred_sq, &n1);
    const double m2_nodes = node_mean(
        grid,
        [&](double x, double y) {
            const double d = c.sdf(x, y);
            return config.band_lo <= d && d <= config.band_hi;
        },
        zero_pred_sq, &n2);

    ManufacturedSample out;
    out.m1_zero_pred = m1_nodes;
    out.m2_zero_pred = m2_nodes;
    out.m1_zero_pred_limit = m1_limit;
    out.m2_zero_pred_limit = m2_limit;
    out.m3_truth_limit = m3_truth_limit;

    auto sdf_field = SignedDistanceField::make(
        grid, ScalarField::from_function(grid, c.sdf).values);
    std::optional<GeometryMask> mask;
    if (kind == ManufacturedKind::RadialDisc) mask = mask_from_sdf(sdf_field);
    FlowField truth = FlowField::make(ScalarField::from_function(grid, c.u),
                                      ScalarField::from_function(grid, c.v),
                                      ScalarField::from_function(grid, c.p));
    out.sample = Sample::make(id, re, std::move(mask), std::move(sdf_field),
                              std::move(truth), std::nullopt);
    return out;
}

} // namespace floweval
