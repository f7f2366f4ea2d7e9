// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pulseg2/envelope.hpp"
#include "pulseg2/hbt.hpp"

namespace pulseg2 {

/// One detection event: absolute tick count plus detector channel.
/// Records in a file are non-decreasing in timestamp.
struct TimeTagRecord {
    std::uint64_t timestamp = 0;  // ticks
    std::uint8_t channel = 0;

    bool operator==(const TimeTagRecord&) const = default;
};

/// "TTG2" container header, 20 bytes little-endian on the wire:
/// magic[4] | version u32 | resolution u64 (picoseconds per tick) |
/// channel_count u32. Records follow at 9 bytes each (u64 timestamp,
/// u8 channel), no padding.
struct TimeTagHeader {
    std::uint32_t version = 1;
    std::uint64_t resolution_ps = 1;
    std::uint32_t channel_count = 2;

    bool operator==(const TimeTagHeader&) const = default;
};

inline constexpr char kTimeTagMagic[4] = {'T', 'T', 'G', '2'};
inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::size_t kRecordBytes = 9;

/// Serialize header + records; returns bytes written.
std::size_t write_binary(const std::vector<TimeTagRecord>& records, const TimeTagHeader& header,
                         std::ostream& sink);

struct ParsedTimeTags {
    TimeTagHeader header;
    std::vector<TimeTagRecord> records;
};

/// Parse and validate a TTG2 byte stream. Malformed input raises parse_error
/// with the byte offset of the offending position; nothing is returned
/// partially.
ParsedTimeTags parse_binary(const std::vector<std::uint8_t>& bytes);

/// CSV exchange format: header line "timestamp_ps,channel", one record per
/// line, timestamps in picoseconds. Errors carry 1-based line numbers.
std::vector<TimeTagRecord> parse_csv(std::string_view text);
void write_csv(const std::vector<TimeTagRecord>& records, std::ostream& sink);

enum class OutOfGridPolicy { error, discard };

/// Collapse time tags onto the detection window grid: window index =
/// floor(timestamp * resolution / window_duration), half-open windows.
/// Multiple tags on one channel in one window collapse to a single click and
/// count as collisions. channel_map[c] gives the detector index for channel
/// c, or -1 to ignore that channel.
ClickSeries bin_to_windows(const std::vector<TimeTagRecord>& records, const TimeTagHeader& header,
                           const WindowGrid& grid, const WindowWeights& weights,
                           const std::vector<int>& channel_map,
                           OutOfGridPolicy policy = OutOfGridPolicy::error);

/// Time tags for a simulated series: one record per click, placed mid-window.
std::vector<TimeTagRecord> export_series(const ClickSeries& series, const WindowGrid& grid,
                                         std::uint64_t resolution_ps = 1);

/// Window duration in whole picoseconds (the binning time base).
std::uint64_t window_picoseconds(const WindowGrid& grid);

std::size_t write_binary_file(const std::vector<TimeTagRecord>& records,
                              const TimeTagHeader& header, const std::string& path);
ParsedTimeTags parse_binary_file(const std::string& path);

}  // namespace pulseg2
