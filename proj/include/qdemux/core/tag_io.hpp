// Time-tag files.
//
// binary: packed 9-byte little-endian records (u8 channel, i64 time_ps), no
//         header, ordered by time then channel.
// csv:    header "channel,time_ps", one tag per line.
// json:   {"tags": [[channel, time_ps], ...]}
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdemux/core/types.hpp"

namespace qdemux {

enum class TagFormat { binary, csv, json };

std::string_view to_string(TagFormat format);
TagFormat tag_format_from_string(std::string_view text);
/// Default file extension, without the dot.
std::string_view file_extension(TagFormat format);

class TagFileError : public std::runtime_error {
public:
    TagFileError(const std::string& what, std::uint64_t byte_offset);
    /// Position of a JSON record, which has no byte offset after parsing.
    static TagFileError at_record(const std::string& what, std::uint64_t record_index);

    std::uint64_t byte_offset() const { return offset_; }

private:
    TagFileError(const std::string& message, std::uint64_t offset, int);
    std::uint64_t offset_;
};

/// Merges per-channel streams into one list ordered by (time, channel).
std::vector<TimeTag> merge_streams(std::span<const TagStream> per_channel);

/// Splits tags by channel. Channels at or above n_channels grow the result.
std::vector<TagStream> split_by_channel(std::span<const TimeTag> tags, std::size_t n_channels = 0);

void write_tags(std::ostream& os, std::span<const TimeTag> tags, TagFormat format);

/// Reads and checks a tag file: non-negative times, non-decreasing per
/// channel. Problems are reported with the byte offset of the bad record.
std::vector<TimeTag> read_tags(std::istream& is, TagFormat format);

}  // namespace qdemux
