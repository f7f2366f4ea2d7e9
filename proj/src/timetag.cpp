// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/timetag.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf, 8);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

std::uint64_t window_picoseconds(const WindowGrid& grid) {
    const double ps = grid.window_duration * 1e12;
    const auto rounded = static_cast<std::uint64_t>(std::llround(ps));
    if (rounded == 0) throw config_error("window_duration is below the 1 ps time base");
    if (std::abs(ps - static_cast<double>(rounded)) > 1e-3)
        throw config_error("window_duration must be a whole number of picoseconds");
    return rounded;
}

std::size_t write_binary(const std::vector<TimeTagRecord>& records, const TimeTagHeader& header,
                         std::ostream& sink) {
    if (header.version != 1) throw config_error("unsupported time-tag version for writing");
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && records[i].timestamp < prev)
            throw config_error("records must be sorted by timestamp (record " +
                               std::to_string(i) + ")");
        if (records[i].channel >= header.channel_count)
            throw config_error("record channel exceeds declared channel_count (record " +
                               std::to_string(i) + ")");
        prev = records[i].timestamp;
    }

    sink.write(kTimeTagMagic, 4);
    put_u32(sink, header.version);
    put_u64(sink, header.resolution_ps);
    put_u32(sink, header.channel_count);
    for (const TimeTagRecord& rec : records) {
        put_u64(sink, rec.timestamp);
        sink.put(static_cast<char>(rec.channel));
    }
    return kHeaderBytes + records.size() * kRecordBytes;
}

ParsedTimeTags parse_binary(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kTimeTagMagic, 4) != 0)
        throw parse_error(parse_error::Kind::bad_magic, 0, "not a TTG2 file (bad magic)");
    if (bytes.size() < kHeaderBytes)
        throw parse_error(parse_error::Kind::truncated_record, bytes.size(),
                          "truncated header: need 20 bytes");

    ParsedTimeTags out;
    out.header.version = get_u32(bytes.data() + 4);
    if (out.header.version != 1)
        throw parse_error(parse_error::Kind::unsupported_version, 4,
                          "unsupported TTG2 version " + std::to_string(out.header.version));
    out.header.resolution_ps = get_u64(bytes.data() + 8);
    out.header.channel_count = get_u32(bytes.data() + 16);

    const std::size_t payload = bytes.size() - kHeaderBytes;
    if (payload % kRecordBytes != 0) {
        const std::size_t offset = kHeaderBytes + (payload / kRecordBytes) * kRecordBytes;
        throw parse_error(parse_error::Kind::truncated_record, offset,
                          "truncated record at byte " + std::to_string(offset));
    }

    const std::size_t count = payload / kRecordBytes;
    out.records.reserve(count);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = kHeaderBytes + i * kRecordBytes;
        TimeTagRecord rec;
        rec.timestamp = get_u64(bytes.data() + offset);
        rec.channel = bytes[offset + 8];
        if (i > 0 && rec.timestamp < prev)
            throw parse_error(parse_error::Kind::timestamp_regression, offset,
                              "timestamp regression at byte " + std::to_string(offset));
        if (rec.channel >= out.header.channel_count)
            throw parse_error(parse_error::Kind::channel_overflow, offset + 8,
                              "channel " + std::to_string(rec.channel) +
                                  " exceeds channel_count");
        prev = rec.timestamp;
        out.records.push_back(rec);
    }
    return out;
}

std::vector<TimeTagRecord> parse_csv(std::string_view text) {
    std::vector<TimeTagRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::uint64_t prev = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        pos = eol + 1;
        if (line_no == 1) {
            if (line != "timestamp_ps,channel")
                throw parse_error(parse_error::Kind::bad_magic, 1,
                                  "expected header line 'timestamp_ps,channel'");
            continue;
        }
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos)
            throw parse_error(parse_error::Kind::bad_field, line_no,
                              "line " + std::to_string(line_no) + ": expected two fields");
        TimeTagRecord rec;
        const std::string_view ts = line.substr(0, comma);
        const std::string_view ch = line.substr(comma + 1);
        auto r1 = std::from_chars(ts.data(), ts.data() + ts.size(), rec.timestamp);
        unsigned channel = 0;
        auto r2 = std::from_chars(ch.data(), ch.data() + ch.size(), channel);
        if (r1.ec != std::errc{} || r1.ptr != ts.data() + ts.size() || r2.ec != std::errc{} ||
            r2.ptr != ch.data() + ch.size() || channel > 255)
            throw parse_error(parse_error::Kind::bad_field, line_no,
                              "line " + std::to_string(line_no) + ": malformed record");
        if (!records.empty() && rec.timestamp < prev)
            throw parse_error(parse_error::Kind::timestamp_regression, line_no,
                              "line " + std::to_string(line_no) + ": timestamp regression");
        rec.channel = static_cast<std::uint8_t>(channel);
        prev = rec.timestamp;
        records.push_back(rec);
        if (eol == text.size()) break;
    }
    return records;
}

void write_csv(const std::vector<TimeTagRecord>& records, std::ostream& sink) {
    sink << "timestamp_ps,channel\n";
    for (const TimeTagRecord& rec : records)
        sink << rec.timestamp << ',' << static_cast<unsigned>(rec.channel) << '\n';
}

ClickSeries bin_to_windows(const std::vector<TimeTagRecord>& records, const TimeTagHeader& header,
                           const WindowGrid& grid, const WindowWeights& weights,
                           const std::vector<int>& channel_map, OutOfGridPolicy policy) {
    validate(grid);
    if (weights.mask.size() != grid.window_count)
        throw config_error("weights were computed for a different grid");
    if (header.resolution_ps == 0) throw config_error("resolution_ps must be > 0");

    int max_det = -1;
    for (int d : channel_map) max_det = std::max(max_det, d);
    if (max_det < 0) throw config_error("channel map assigns no detectors");

    ClickSeries series;
    series.clicks.assign(static_cast<std::size_t>(max_det) + 1, BitSeries(grid.window_count));
    series.mask = weights.mask;
    series.on_count = weights.on_count;
    series.intensity_ratio = intensity_ratio(weights);

    const std::uint64_t window_ps = window_picoseconds(grid);
    for (const TimeTagRecord& rec : records) {
        if (rec.channel >= channel_map.size() || channel_map[rec.channel] < 0) continue;
        const auto det = static_cast<std::size_t>(channel_map[rec.channel]);
        const unsigned __int128 t_ps =
            static_cast<unsigned __int128>(rec.timestamp) * header.resolution_ps;
        const auto window = static_cast<std::uint64_t>(t_ps / window_ps);
        if (window >= grid.window_count) {
            if (policy == OutOfGridPolicy::error)
                throw config_error("timestamp beyond the window grid span");
            ++series.discarded_count;
            continue;
        }
        if (series.clicks[det].get(window))
            ++series.collision_count;  // one click max per reset window
        else
            series.clicks[det].set(window);
    }
    return series;
}

std::vector<TimeTagRecord> export_series(const ClickSeries& series, const WindowGrid& grid,
                                         std::uint64_t resolution_ps) {
    if (resolution_ps == 0) throw config_error("resolution_ps must be > 0");
    const std::uint64_t window_ps = window_picoseconds(grid);
    if (resolution_ps > window_ps / 2)
        throw config_error("resolution too coarse for the window duration");

    std::vector<TimeTagRecord> records;
    for (std::size_t w = 0; w < series.window_count(); ++w) {
        const std::uint64_t mid_ps = static_cast<std::uint64_t>(w) * window_ps + window_ps / 2;
        for (std::size_t d = 0; d < series.clicks.size(); ++d) {
            if (series.clicks[d].get(w))
                records.push_back({mid_ps / resolution_ps, static_cast<std::uint8_t>(d)});
        }
    }
    return records;
}

std::size_t write_binary_file(const std::vector<TimeTagRecord>& records,
                              const TimeTagHeader& header, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open output file: " + path);
    const std::size_t n = write_binary(records, header, os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + path);
    return n;
}

ParsedTimeTags parse_binary_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot open input file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return parse_binary(bytes);
}

}  // namespace pulseg2
