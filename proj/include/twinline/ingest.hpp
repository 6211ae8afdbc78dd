// Parsing, validation, and time-alignment of the three input stream kinds
// (detections, sensor samples, ground-truth ledger) plus the line-topology
// configuration. Also owns the matching writers: the simulator emits exactly
// the formats read here, so write -> read is the integration path.
//
// Formats:
//   detections  one JSON object per line:
//               {"t_ms":int,"cam":int,"bbox":[x_min,y_min,x_max,y_max],
//                "conf":float,"class":string}
//   sensor      CSV, columns time_ms,ax,ay,az required; gx,gy,gz,mx,my,mz,
//               pressure_hpa,temp_c,humidity_rh,co2_ppm optional
//   topology    JSON document (schema in README)
//   ledger      JSON document (schema in README)
#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinline/core.hpp"

namespace twinline {

// ---------------------------------------------------------------------------
// Domain types

struct SensorSample {
    Timestamp time = 0;
    std::array<double, 3> accel{};  // m/s^2, required
    std::optional<std::array<double, 3>> gyro;  // deg/s
    std::optional<std::array<double, 3>> mag;   // uT
    std::optional<double> pressure_hpa;
    std::optional<double> temp_c;
    std::optional<double> humidity_rh;
    std::optional<double> co2_ppm;

    double accel_magnitude() const {
        return std::sqrt(accel[0] * accel[0] + accel[1] * accel[1] + accel[2] * accel[2]);
    }
};

struct NodeDef {
    int id = 0;
    std::string name;
};

// One tripwire group owned by a camera on an edge. `wire_a` is the counting
// wire (index 0); `wire_b` (index 1), when present, pairs with it for belt
// speed estimation across `gap_m` meters of real-world travel.
struct TripwireDef {
    CameraId camera;
    LineSegment2D wire_a;
    std::optional<LineSegment2D> wire_b;
    std::optional<double> gap_m;
    int priority = 1;  // 1 = preferred camera for this edge
};

struct EdgeDef {
    int id = 0;
    int from_node = 0;
    int to_node = 0;
    std::vector<TripwireDef> tripwires;
};

struct LineTopology {
    std::vector<NodeDef> nodes;
    std::vector<EdgeDef> edges;
    double ideal_cycle_time_s = 0.0;
    std::optional<double> planned_production_time_s;  // defaults to session span

    const EdgeDef* find_edge(int id) const {
        for (const auto& e : edges)
            if (e.id == id) return &e;
        return nullptr;
    }

    void validate() const;
};

struct PerFrameTruthFrame {
    Timestamp time = 0;
    std::vector<BoundingBox> boxes;
    std::vector<int> piece_ids;  // in-memory only; empty when loaded from file
};

// Exact record of what actually happened on the line, used as the evaluation
// oracle. `edge_crossings` holds the true times at which each piece crossed
// each edge's counting wire (the quantity a laser counter at that point would
// have measured).
struct GroundTruthLedger {
    Timestamp session_end = 0;
    std::vector<std::pair<Timestamp, int>> injections;      // (time, piece_id)
    std::vector<std::pair<Timestamp, int>> removals_at_qa;  // (time, piece_id)
    std::vector<std::pair<Timestamp, int>> exits;           // (time, piece_id)
    std::vector<std::pair<Timestamp, Timestamp>> stop_intervals;  // (t_stop, t_start)
    std::map<int, std::vector<std::pair<Timestamp, int>>> edge_crossings;
    std::optional<std::map<int, std::vector<PerFrameTruthFrame>>> per_frame_truth;  // by camera

    void validate() const;
};

struct LedgerEvent {
    enum class Kind { injection, removal_at_qa, exit, stop_begin, stop_end };
    Kind kind = Kind::injection;
    Timestamp time = 0;
    int piece_id = -1;
};

// Tagged union for the globally merged event sequence.
struct MergedEvent {
    Timestamp time = 0;
    std::variant<SensorSample, Detection, LedgerEvent> payload;
};

struct ParseWarnings {
    std::size_t out_of_order = 0;
    std::size_t unknown_fields = 0;

    void absorb(const ParseWarnings& w) {
        out_of_order += w.out_of_order;
        unknown_fields += w.unknown_fields;
    }
};

struct DetectionStreams {
    std::map<int, std::vector<Detection>> by_camera;  // each vector time-sorted
    ParseWarnings warnings;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& [cam, v] : by_camera) n += v.size();
        return n;
    }
};

struct SensorParse {
    std::vector<SensorSample> samples;  // time-sorted
    ParseWarnings warnings;
};

// ---------------------------------------------------------------------------
// Small formatting / scanning helpers

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void append_int(std::string& out, std::int64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void append_json_string(std::string& out, std::string_view s) {
    out.push_back('"');
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(c);
                }
        }
    }
    out.push_back('"');
}

struct Cursor {
    const char* p;
    const char* end;

    bool lit(std::string_view s) {
        if (end - p < static_cast<std::ptrdiff_t>(s.size())) return false;
        if (std::string_view(p, s.size()) != s) return false;
        p += s.size();
        return true;
    }

    bool number(double& out) {
        auto res = std::from_chars(p, end, out);
        if (res.ec != std::errc()) return false;
        p = res.ptr;
        return true;
    }

    bool integer(std::int64_t& out) {
        auto res = std::from_chars(p, end, out);
        if (res.ec != std::errc()) return false;
        p = res.ptr;
        return true;
    }

    // Plain string without escapes; bails out (returns false) on backslash so
    // the caller can fall back to the full JSON parser.
    bool simple_string(std::string& out) {
        const char* q = p;
        while (q < end && *q != '"' && *q != '\\') ++q;
        if (q >= end || *q != '"') return false;
        out.assign(p, q);
        p = q + 1;
        return true;
    }
};

[[noreturn]] inline void fail_parse(const std::filesystem::path& path, std::size_t line_no,
                                    const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

[[noreturn]] inline void fail_validation(const std::filesystem::path& path, std::size_t line_no,
                                         const std::string& what) {
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Detection stream (JSON lines)

inline std::string format_detection_line(const Detection& d) {
    std::string out;
    out.reserve(96);
    out += "{\"t_ms\":";
    detail::append_int(out, d.time);
    out += ",\"cam\":";
    detail::append_int(out, d.camera.value);
    out += ",\"bbox\":[";
    detail::append_double(out, d.bbox.x_min);
    out.push_back(',');
    detail::append_double(out, d.bbox.y_min);
    out.push_back(',');
    detail::append_double(out, d.bbox.x_max);
    out.push_back(',');
    detail::append_double(out, d.bbox.y_max);
    out += "],\"conf\":";
    detail::append_double(out, d.confidence);
    out += ",\"class\":";
    detail::append_json_string(out, d.class_label);
    out.push_back('}');
    return out;
}

namespace detail {

// Fast path for the canonical writer output; returns false when the line is
// not in canonical shape (the caller then uses the general JSON parser).
inline bool parse_detection_fast(std::string_view line, Detection& d) {
    Cursor c{line.data(), line.data() + line.size()};
    std::int64_t t = 0, cam = 0;
    if (!c.lit("{\"t_ms\":") || !c.integer(t)) return false;
    if (!c.lit(",\"cam\":") || !c.integer(cam)) return false;
    if (!c.lit(",\"bbox\":[") || !c.number(d.bbox.x_min)) return false;
    if (!c.lit(",") || !c.number(d.bbox.y_min)) return false;
    if (!c.lit(",") || !c.number(d.bbox.x_max)) return false;
    if (!c.lit(",") || !c.number(d.bbox.y_max)) return false;
    if (!c.lit("],\"conf\":") || !c.number(d.confidence)) return false;
    if (!c.lit(",\"class\":\"") || !c.simple_string(d.class_label)) return false;
    if (!c.lit("}") || c.p != c.end) return false;
    d.time = t;
    d.camera.value = static_cast<int>(cam);
    return true;
}

inline bool parse_detection_general(const std::string& line, Detection& d,
                                    std::size_t& unknown_fields, std::string& err) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        err = "malformed detection record";
        return false;
    }
    static const std::set<std::string> known{"t_ms", "cam", "bbox", "conf", "class"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) ++unknown_fields;
    }
    try {
        d.time = j.at("t_ms").get<std::int64_t>();
        d.camera.value = j.at("cam").get<int>();
        const auto& bb = j.at("bbox");
        if (!bb.is_array() || bb.size() != 4) {
            err = "bbox must be a 4-element array";
            return false;
        }
        d.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                  bb[3].get<double>()};
        d.confidence = j.at("conf").get<double>();
        d.class_label = j.value("class", std::string{});
    } catch (const nlohmann::json::exception& e) {
        err = e.what();
        return false;
    }
    return true;
}

}  // namespace detail

// Reads one detections file (possibly interleaving cameras). Timestamps must
// be non-decreasing within each camera; violations are validation errors.
inline DetectionStreams read_detections(const std::filesystem::path& path) {
    DetectionStreams out;
    auto in = detail::open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    std::map<int, Timestamp> last_time;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Detection d;
        if (!detail::parse_detection_fast(line, d)) {
            std::string err;
            if (!detail::parse_detection_general(line, d, out.warnings.unknown_fields, err)) {
                detail::fail_parse(path, line_no, err);
            }
        }
        if (d.time < 0) detail::fail_validation(path, line_no, "t_ms must be non-negative");
        if (d.camera.value < 1) detail::fail_validation(path, line_no, "cam must be >= 1");
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
            detail::fail_validation(path, line_no, "conf must be in [0,1]");
        if (!d.bbox.valid())
            detail::fail_validation(path, line_no, "bbox must satisfy x_min<x_max, y_min<y_max");
        auto [it, fresh] = last_time.try_emplace(d.camera.value, d.time);
        if (!fresh) {
            if (d.time < it->second)
                detail::fail_validation(path, line_no,
                                        "non-monotone timestamp within camera " +
                                            std::to_string(d.camera.value));
            it->second = d.time;
        }
        out.by_camera[d.camera.value].push_back(std::move(d));
    }
    return out;
}

// Reads several files (or every *.jsonl in a directory) and merges per camera.
inline DetectionStreams read_detections_multi(const std::vector<std::filesystem::path>& inputs) {
    std::vector<std::filesystem::path> files;
    for (const auto& p : inputs) {
        if (std::filesystem::is_directory(p)) {
            for (const auto& e : std::filesystem::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".jsonl")
                    files.push_back(e.path());
            }
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    DetectionStreams out;
    for (const auto& f : files) {
        DetectionStreams one = read_detections(f);
        out.warnings.absorb(one.warnings);
        for (auto& [cam, dets] : one.by_camera) {
            auto& dst = out.by_camera[cam];
            if (dst.empty()) {
                dst = std::move(dets);
            } else {
                std::vector<Detection> merged;
                merged.reserve(dst.size() + dets.size());
                std::merge(dst.begin(), dst.end(), dets.begin(), dets.end(),
                           std::back_inserter(merged),
                           [](const Detection& a, const Detection& b) { return a.time < b.time; });
                dst = std::move(merged);
            }
        }
    }
    return out;
}

inline void write_detections_file(const std::filesystem::path& path,
                                  const std::vector<Detection>& dets) {
    std::string buf;
    buf.reserve(dets.size() * 96);
    for (const auto& d : dets) {
        buf += format_detection_line(d);
        buf.push_back('\n');
    }
    detail::write_text_file(path, buf);
}

// Writes one cam<N>.jsonl per camera into `dir`.
inline void write_detections_dir(const std::filesystem::path& dir, const DetectionStreams& streams) {
    std::filesystem::create_directories(dir);
    for (const auto& [cam, dets] : streams.by_camera) {
        write_detections_file(dir / ("cam" + std::to_string(cam) + ".jsonl"), dets);
    }
}

// ---------------------------------------------------------------------------
// Sensor CSV

namespace detail {

inline std::vector<std::string_view> split_csv_row(std::string_view row, char sep = ',') {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = row.find(sep, start);
        if (pos == std::string_view::npos) {
            cells.push_back(row.substr(start));
            break;
        }
        cells.push_back(row.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

inline bool cell_double(std::string_view cell, double& out) {
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

inline bool cell_int(std::string_view cell, std::int64_t& out) {
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

}  // namespace detail

inline constexpr std::array<std::string_view, 14> kSensorColumns = {
    "time_ms", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz",
    "pressure_hpa", "temp_c", "humidity_rh", "co2_ppm"};

// Reads a sensor CSV. Column order is free; unknown columns are ignored with
// a counted warning; shuffled rows are re-sorted with a counted warning.
inline SensorParse read_sensor_csv(const std::filesystem::path& path) {
    SensorParse out;
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::map<std::string, int, std::less<>> col_index;
    const auto header = detail::split_csv_row(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        bool known = false;
        for (auto name : kSensorColumns)
            if (header[i] == name) known = true;
        if (!known) {
            ++out.warnings.unknown_fields;
            continue;
        }
        col_index.emplace(std::string(header[i]), static_cast<int>(i));
    }
    for (auto required : {"time_ms", "ax", "ay", "az"}) {
        if (!col_index.count(required))
            throw ValidationError(path.string() + ": missing required column " +
                                  std::string(required));
    }

    auto cell_of = [&](const std::vector<std::string_view>& cells,
                       std::string_view name) -> std::optional<std::string_view> {
        auto it = col_index.find(name);
        if (it == col_index.end()) return std::nullopt;
        if (it->second >= static_cast<int>(cells.size())) return std::nullopt;
        auto c = cells[static_cast<std::size_t>(it->second)];
        if (c.empty()) return std::nullopt;
        return c;
    };

    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_row(line);
        SensorSample s;

        auto require_double = [&](std::string_view name) -> double {
            auto c = cell_of(cells, name);
            if (!c)
                detail::fail_parse(path, row_no, "missing value for " + std::string(name));
            double v = 0.0;
            if (!detail::cell_double(*c, v))
                detail::fail_parse(path, row_no, "unparsable cell " + std::string(name));
            return v;
        };
        auto optional_double = [&](std::string_view name) -> std::optional<double> {
            auto c = cell_of(cells, name);
            if (!c) return std::nullopt;
            double v = 0.0;
            if (!detail::cell_double(*c, v))
                detail::fail_parse(path, row_no, "unparsable cell " + std::string(name));
            return v;
        };
        auto optional_vec3 = [&](std::string_view cx, std::string_view cy, std::string_view cz,
                                 std::string_view group) -> std::optional<std::array<double, 3>> {
            auto vx = optional_double(cx), vy = optional_double(cy), vz = optional_double(cz);
            const int present = int(bool(vx)) + int(bool(vy)) + int(bool(vz));
            if (present == 0) return std::nullopt;
            if (present != 3)
                detail::fail_parse(path, row_no,
                                   "inconsistent " + std::string(group) + " cells (need all 3)");
            return std::array<double, 3>{*vx, *vy, *vz};
        };

        {
            auto c = cell_of(cells, "time_ms");
            if (!c) detail::fail_parse(path, row_no, "missing value for time_ms");
            std::int64_t t = 0;
            if (!detail::cell_int(*c, t))
                detail::fail_parse(path, row_no, "unparsable cell time_ms");
            if (t < 0) detail::fail_validation(path, row_no, "time_ms must be non-negative");
            s.time = t;
        }
        s.accel = {require_double("ax"), require_double("ay"), require_double("az")};
        for (double a : s.accel) {
            if (!std::isfinite(a))
                detail::fail_validation(path, row_no, "acceleration must be finite");
        }
        s.gyro = optional_vec3("gx", "gy", "gz", "gyro");
        s.mag = optional_vec3("mx", "my", "mz", "mag");
        s.pressure_hpa = optional_double("pressure_hpa");
        s.temp_c = optional_double("temp_c");
        s.humidity_rh = optional_double("humidity_rh");
        s.co2_ppm = optional_double("co2_ppm");

        if (!out.samples.empty() && s.time < out.samples.back().time) ++out.warnings.out_of_order;
        out.samples.push_back(std::move(s));
    }
    if (out.warnings.out_of_order > 0) {
        std::stable_sort(out.samples.begin(), out.samples.end(),
                         [](const SensorSample& a, const SensorSample& b) { return a.time < b.time; });
    }
    return out;
}

inline void write_sensor_csv(const std::filesystem::path& path,
                             const std::vector<SensorSample>& samples) {
    bool any_gyro = false, any_mag = false, any_p = false, any_t = false, any_h = false,
         any_c = false;
    for (const auto& s : samples) {
        any_gyro |= s.gyro.has_value();
        any_mag |= s.mag.has_value();
        any_p |= s.pressure_hpa.has_value();
        any_t |= s.temp_c.has_value();
        any_h |= s.humidity_rh.has_value();
        any_c |= s.co2_ppm.has_value();
    }
    std::string buf;
    buf.reserve(samples.size() * 64 + 128);
    buf += "time_ms,ax,ay,az";
    if (any_gyro) buf += ",gx,gy,gz";
    if (any_mag) buf += ",mx,my,mz";
    if (any_p) buf += ",pressure_hpa";
    if (any_t) buf += ",temp_c";
    if (any_h) buf += ",humidity_rh";
    if (any_c) buf += ",co2_ppm";
    buf.push_back('\n');

    auto put_opt = [&](const std::optional<double>& v) {
        buf.push_back(',');
        if (v) detail::append_double(buf, *v);
    };
    for (const auto& s : samples) {
        detail::append_int(buf, s.time);
        for (double a : s.accel) {
            buf.push_back(',');
            detail::append_double(buf, a);
        }
        if (any_gyro) {
            for (int i = 0; i < 3; ++i) put_opt(s.gyro ? std::optional<double>((*s.gyro)[i]) : std::nullopt);
        }
        if (any_mag) {
            for (int i = 0; i < 3; ++i) put_opt(s.mag ? std::optional<double>((*s.mag)[i]) : std::nullopt);
        }
        if (any_p) put_opt(s.pressure_hpa);
        if (any_t) put_opt(s.temp_c);
        if (any_h) put_opt(s.humidity_rh);
        if (any_c) put_opt(s.co2_ppm);
        buf.push_back('\n');
    }
    detail::write_text_file(path, buf);
}

// ---------------------------------------------------------------------------
// Stream merge

// Stable k-way merge of per-camera detection streams and the sensor stream.
// Ties are broken by stream kind (sensor before detection), then camera id.
inline std::vector<MergedEvent> merge_streams(const DetectionStreams& dets,
                                              const std::vector<SensorSample>& sensors) {
    struct Head {
        int kind;    // 0 = sensor, 1 = detection
        int camera;  // 0 for sensor
        const std::vector<Detection>* dstream;
        const std::vector<SensorSample>* sstream;
        std::size_t pos = 0;
    };
    std::vector<Head> heads;
    heads.push_back({0, 0, nullptr, &sensors, 0});
    for (const auto& [cam, stream] : dets.by_camera) {
        heads.push_back({1, cam, &stream, nullptr, 0});
    }

    std::size_t total = sensors.size() + dets.total();
    std::vector<MergedEvent> out;
    out.reserve(total);
    while (out.size() < total) {
        Head* best = nullptr;
        Timestamp best_time = 0;
        for (auto& h : heads) {
            const std::size_t n = h.kind == 0 ? h.sstream->size() : h.dstream->size();
            if (h.pos >= n) continue;
            const Timestamp t =
                h.kind == 0 ? (*h.sstream)[h.pos].time : (*h.dstream)[h.pos].time;
            if (!best || t < best_time ||
                (t == best_time && (h.kind < best->kind ||
                                    (h.kind == best->kind && h.camera < best->camera)))) {
                best = &h;
                best_time = t;
            }
        }
        if (best->kind == 0) {
            out.push_back({best_time, (*best->sstream)[best->pos]});
        } else {
            out.push_back({best_time, (*best->dstream)[best->pos]});
        }
        ++best->pos;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Topology config

inline void LineTopology::validate() const {
    if (!(ideal_cycle_time_s > 0.0)) throw ValidationError("ideal_cycle_time_s must be positive");
    if (planned_production_time_s && !(*planned_production_time_s > 0.0))
        throw ValidationError("planned_production_time_s must be positive");
    std::set<int> node_ids;
    for (const auto& n : nodes) {
        if (!node_ids.insert(n.id).second)
            throw ValidationError("duplicate node id " + std::to_string(n.id));
    }
    std::set<int> edge_ids;
    for (const auto& e : edges) {
        if (!edge_ids.insert(e.id).second)
            throw ValidationError("duplicate edge id " + std::to_string(e.id));
        if (!node_ids.count(e.from_node) || !node_ids.count(e.to_node))
            throw ValidationError("edge " + std::to_string(e.id) + ": unknown node");
        if (e.tripwires.empty())
            throw ValidationError("edge " + std::to_string(e.id) + ": needs at least one tripwire");
        std::set<int> prios;
        for (const auto& tw : e.tripwires) {
            if (tw.camera.value < 1)
                throw ValidationError("edge " + std::to_string(e.id) + ": camera id must be >= 1");
            if (!prios.insert(tw.priority).second)
                throw ValidationError("edge " + std::to_string(e.id) + ": duplicate priority " +
                                      std::to_string(tw.priority));
            if (!tw.wire_a.valid())
                throw ValidationError("edge " + std::to_string(e.id) + ": degenerate wire");
            if (tw.wire_b) {
                if (!tw.wire_b->valid())
                    throw ValidationError("edge " + std::to_string(e.id) + ": degenerate wire_b");
                if (!tw.gap_m || !(*tw.gap_m > 0.0))
                    throw ValidationError("edge " + std::to_string(e.id) +
                                          ": wire pair requires gap_m > 0");
            }
        }
    }
}

namespace detail {

inline LineSegment2D segment_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError(what + " must be [x1,y1,x2,y2]");
    return {{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
}

inline nlohmann::json segment_to_json(const LineSegment2D& s) {
    return nlohmann::json::array({s.a.x, s.a.y, s.b.x, s.b.y});
}

}  // namespace detail

inline LineTopology topology_from_json(const nlohmann::json& j) {
    LineTopology topo;
    try {
        topo.ideal_cycle_time_s = j.at("ideal_cycle_time_s").get<double>();
        if (j.contains("planned_production_time_s"))
            topo.planned_production_time_s = j.at("planned_production_time_s").get<double>();
        for (const auto& nj : j.at("nodes")) {
            topo.nodes.push_back({nj.at("id").get<int>(), nj.value("name", std::string{})});
        }
        for (const auto& ej : j.at("edges")) {
            EdgeDef e;
            e.id = ej.at("id").get<int>();
            e.from_node = ej.at("from").get<int>();
            e.to_node = ej.at("to").get<int>();
            for (const auto& tj : ej.at("tripwires")) {
                TripwireDef tw;
                tw.camera.value = tj.at("camera").get<int>();
                tw.priority = tj.at("priority").get<int>();
                tw.wire_a = detail::segment_from_json(tj.at("wire_a"), "wire_a");
                if (tj.contains("wire_b")) {
                    tw.wire_b = detail::segment_from_json(tj.at("wire_b"), "wire_b");
                    tw.gap_m = tj.at("gap_m").get<double>();
                }
                e.tripwires.push_back(tw);
            }
            topo.edges.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("topology: ") + e.what());
    }
    topo.validate();
    return topo;
}

inline LineTopology load_topology(const std::filesystem::path& path) {
    return topology_from_json(detail::parse_json_file(path));
}

inline nlohmann::ordered_json topology_to_json(const LineTopology& topo) {
    nlohmann::ordered_json j;
    j["ideal_cycle_time_s"] = topo.ideal_cycle_time_s;
    if (topo.planned_production_time_s)
        j["planned_production_time_s"] = *topo.planned_production_time_s;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : topo.nodes) j["nodes"].push_back({{"id", n.id}, {"name", n.name}});
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : topo.edges) {
        nlohmann::ordered_json ej{{"id", e.id}, {"from", e.from_node}, {"to", e.to_node}};
        ej["tripwires"] = nlohmann::ordered_json::array();
        for (const auto& tw : e.tripwires) {
            nlohmann::ordered_json tj{{"camera", tw.camera.value}, {"priority", tw.priority}};
            tj["wire_a"] = detail::segment_to_json(tw.wire_a);
            if (tw.wire_b) {
                tj["wire_b"] = detail::segment_to_json(*tw.wire_b);
                tj["gap_m"] = *tw.gap_m;
            }
            ej["tripwires"].push_back(std::move(tj));
        }
        j["edges"].push_back(std::move(ej));
    }
    return j;
}

inline void save_topology(const std::filesystem::path& path, const LineTopology& topo) {
    detail::write_text_file(path, topology_to_json(topo).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Ground-truth ledger

inline void GroundTruthLedger::validate() const {
    Timestamp prev_end = -1;
    for (const auto& [t_stop, t_start] : stop_intervals) {
        if (!(t_stop < t_start))
            throw ValidationError("stop interval must have t_stop < t_start");
        if (t_stop <= prev_end)
            throw ValidationError("stop intervals must be disjoint and ordered");
        prev_end = t_start;
    }
    std::set<int> injected;
    for (const auto& [t, id] : injections) injected.insert(id);
    for (const auto& [t, id] : removals_at_qa) {
        if (!injected.count(id))
            throw ValidationError("removed piece " + std::to_string(id) + " was never injected");
    }
    for (const auto& [t, id] : exits) {
        if (!injected.count(id))
            throw ValidationError("exited piece " + std::to_string(id) + " was never injected");
    }
}

namespace detail {

inline std::vector<std::pair<Timestamp, int>> pairs_from_json(const nlohmann::json& j) {
    std::vector<std::pair<Timestamp, int>> out;
    for (const auto& e : j) out.emplace_back(e.at(0).get<std::int64_t>(), e.at(1).get<int>());
    return out;
}

inline nlohmann::ordered_json pairs_to_json(const std::vector<std::pair<Timestamp, int>>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [t, id] : v) arr.push_back({t, id});
    return arr;
}

}  // namespace detail

inline GroundTruthLedger ledger_from_json(const nlohmann::json& j) {
    GroundTruthLedger led;
    try {
        led.session_end = j.at("session_ms").get<std::int64_t>();
        led.injections = detail::pairs_from_json(j.at("injections"));
        led.removals_at_qa = detail::pairs_from_json(j.at("removals_at_qa"));
        led.exits = detail::pairs_from_json(j.at("exits"));
        for (const auto& e : j.at("stop_intervals"))
            led.stop_intervals.emplace_back(e.at(0).get<std::int64_t>(),
                                            e.at(1).get<std::int64_t>());
        if (j.contains("edge_crossings")) {
            for (const auto& [key, arr] : j.at("edge_crossings").items())
                led.edge_crossings[std::stoi(key)] = detail::pairs_from_json(arr);
        }
        if (j.contains("per_frame_truth")) {
            std::map<int, std::vector<PerFrameTruthFrame>> pft;
            for (const auto& [key, frames] : j.at("per_frame_truth").items()) {
                auto& dst = pft[std::stoi(key)];
                for (const auto& fj : frames) {
                    PerFrameTruthFrame f;
                    f.time = fj.at("t_ms").get<std::int64_t>();
                    for (const auto& bj : fj.at("boxes")) {
                        f.boxes.push_back({bj.at(0).get<double>(), bj.at(1).get<double>(),
                                           bj.at(2).get<double>(), bj.at(3).get<double>()});
                    }
                    dst.push_back(std::move(f));
                }
            }
            led.per_frame_truth = std::move(pft);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ledger: ") + e.what());
    }
    led.validate();
    return led;
}

inline GroundTruthLedger load_ledger(const std::filesystem::path& path) {
    return ledger_from_json(detail::parse_json_file(path));
}

inline nlohmann::ordered_json ledger_to_json(const GroundTruthLedger& led) {
    nlohmann::ordered_json j;
    j["session_ms"] = led.session_end;
    j["injections"] = detail::pairs_to_json(led.injections);
    j["removals_at_qa"] = detail::pairs_to_json(led.removals_at_qa);
    j["exits"] = detail::pairs_to_json(led.exits);
    j["stop_intervals"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : led.stop_intervals) j["stop_intervals"].push_back({a, b});
    j["edge_crossings"] = nlohmann::ordered_json::object();
    for (const auto& [edge, v] : led.edge_crossings)
        j["edge_crossings"][std::to_string(edge)] = detail::pairs_to_json(v);
    if (led.per_frame_truth) {
        auto& pj = j["per_frame_truth"] = nlohmann::ordered_json::object();
        for (const auto& [cam, frames] : *led.per_frame_truth) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& f : frames) {
                nlohmann::ordered_json fj{{"t_ms", f.time}};
                auto boxes = nlohmann::ordered_json::array();
                for (const auto& b : f.boxes) boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
                fj["boxes"] = std::move(boxes);
                arr.push_back(std::move(fj));
            }
            pj[std::to_string(cam)] = std::move(arr);
        }
    }
    return j;
}

inline void save_ledger(const std::filesystem::path& path, const GroundTruthLedger& led) {
    detail::write_text_file(path, ledger_to_json(led).dump() + "\n");
}

}  // namespace twinline
