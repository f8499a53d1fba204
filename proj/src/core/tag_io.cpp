#include "qdemux/core/tag_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <iterator>
#include <json.hpp>
#include <ostream>

namespace qdemux {

namespace {

constexpr std::size_t kRecordBytes = 9;

// Per-channel ordering check shared by all readers.
class OrderCheck {
public:
    void operator()(const TimeTag& tag, std::uint64_t offset)
    {
        if (tag.time_ps < 0)
            throw TagFileError("negative time tag", offset);
        if (last_.size() <= tag.channel)
            last_.resize(tag.channel + 1u, -1);
        if (tag.time_ps < last_[tag.channel])
            throw TagFileError("tags of channel " + std::to_string(tag.channel) + " out of order",
                               offset);
        last_[tag.channel] = tag.time_ps;
    }

private:
    std::vector<TimePs> last_;
};

template <class T>
bool parse_number(std::string_view text, T& out)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && p == text.data() + text.size();
}

std::vector<TimeTag> read_binary(std::istream& is)
{
    std::vector<TimeTag> tags;
    OrderCheck check;
    std::array<unsigned char, kRecordBytes> rec{};
    std::uint64_t offset = 0;
    for (;;) {
        is.read(reinterpret_cast<char*>(rec.data()), kRecordBytes);
        const auto got = static_cast<std::size_t>(is.gcount());
        if (got == 0)
            break;
        if (got < kRecordBytes)
            throw TagFileError("truncated record", offset);
        std::uint64_t t = 0;
        for (int b = 7; b >= 0; --b)
            t = (t << 8) | rec[1 + static_cast<std::size_t>(b)];
        TimeTag tag{rec[0], static_cast<TimePs>(t)};
        check(tag, offset);
        tags.push_back(tag);
        offset += kRecordBytes;
    }
    return tags;
}

std::vector<TimeTag> read_csv(std::istream& is)
{
    std::vector<TimeTag> tags;
    OrderCheck check;
    std::string line;
    std::uint64_t offset = 0;
    bool header = true;
    while (std::getline(is, line)) {
        const std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (header) {
            if (line != "channel,time_ps")
                throw TagFileError("expected header 'channel,time_ps'", line_offset);
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        unsigned channel = 0;
        TimePs t = 0;
        if (comma == std::string::npos ||
            !parse_number(std::string_view(line).substr(0, comma), channel) || channel > 255 ||
            !parse_number(std::string_view(line).substr(comma + 1), t))
            throw TagFileError("malformed tag line", line_offset);
        TimeTag tag{static_cast<std::uint8_t>(channel), t};
        check(tag, line_offset);
        tags.push_back(tag);
    }
    if (header)
        throw TagFileError("missing header", 0);
    return tags;
}

std::vector<TimeTag> read_json(std::istream& is)
{
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw TagFileError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("tags") || !doc["tags"].is_array())
        throw TagFileError("expected an object with a 'tags' array", 0);
    std::vector<TimeTag> tags;
    OrderCheck check;
    std::uint64_t index = 0;
    for (const auto& item : doc["tags"]) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number_unsigned() ||
            item[0].get<unsigned>() > 255 || !item[1].is_number_integer())
            throw TagFileError::at_record("malformed tag", index);
        TimeTag tag{static_cast<std::uint8_t>(item[0].get<unsigned>()), item[1].get<TimePs>()};
        try {
            check(tag, 0);
        } catch (const TagFileError& e) {
            std::string msg = e.what();
            throw TagFileError::at_record(msg.substr(0, msg.find(" at byte")), index);
        }
        tags.push_back(tag);
        ++index;
    }
    return tags;
}

}  // namespace

TagFileError::TagFileError(const std::string& what, std::uint64_t byte_offset)
    : TagFileError(what + " at byte offset " + std::to_string(byte_offset), byte_offset, 0)
{
}

TagFileError::TagFileError(const std::string& message, std::uint64_t offset, int)
    : std::runtime_error(message), offset_(offset)
{
}

TagFileError TagFileError::at_record(const std::string& what, std::uint64_t record_index)
{
    return TagFileError(what + " at record " + std::to_string(record_index), 0, 0);
}

std::string_view to_string(TagFormat format)
{
    switch (format) {
    case TagFormat::binary:
        return "binary";
    case TagFormat::csv:
        return "csv";
    case TagFormat::json:
        return "json";
    }
    return "binary";
}

TagFormat tag_format_from_string(std::string_view text)
{
    if (text == "binary" || text == "bin")
        return TagFormat::binary;
    if (text == "csv")
        return TagFormat::csv;
    if (text == "json")
        return TagFormat::json;
    throw InvalidArgument("unknown tag format '" + std::string(text) + "'");
}

std::string_view file_extension(TagFormat format)
{
    return format == TagFormat::binary ? "bin" : to_string(format);
}

std::vector<TimeTag> merge_streams(std::span<const TagStream> per_channel)
{
    std::vector<TimeTag> tags;
    std::size_t total = 0;
    for (const auto& s : per_channel)
        total += s.size();
    tags.reserve(total);
    for (std::size_t c = 0; c < per_channel.size(); ++c)
        for (const TimePs t : per_channel[c])
            tags.push_back({static_cast<std::uint8_t>(c), t});
    std::stable_sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) {
        return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
    });
    return tags;
}

std::vector<TagStream> split_by_channel(std::span<const TimeTag> tags, std::size_t n_channels)
{
    std::vector<TagStream> out(n_channels);
    for (const auto& t : tags) {
        if (t.channel >= out.size())
            out.resize(t.channel + 1u);
        out[t.channel].push_back(t.time_ps);
    }
    return out;
}

void write_tags(std::ostream& os, std::span<const TimeTag> tags, TagFormat format)
{
    switch (format) {
    case TagFormat::binary: {
        std::array<char, kRecordBytes> rec{};
        for (const auto& tag : tags) {
            rec[0] = static_cast<char>(tag.channel);
            auto t = static_cast<std::uint64_t>(tag.time_ps);
            for (std::size_t b = 0; b < 8; ++b, t >>= 8)
                rec[1 + b] = static_cast<char>(t & 0xff);
            os.write(rec.data(), kRecordBytes);
        }
        break;
    }
    case TagFormat::csv:
        os << "channel,time_ps\n";
        for (const auto& tag : tags)
            os << static_cast<unsigned>(tag.channel) << ',' << tag.time_ps << '\n';
        break;
    case TagFormat::json:
        os << "{\"tags\": [";
        for (std::size_t i = 0; i < tags.size(); ++i)
            os << (i ? ", [" : "[") << static_cast<unsigned>(tags[i].channel) << ", "
               << tags[i].time_ps << ']';
        os << "]}\n";
        break;
    }
}

std::vector<TimeTag> read_tags(std::istream& is, TagFormat format)
{
    switch (format) {
    case TagFormat::binary:
        return read_binary(is);
    case TagFormat::csv:
        return read_csv(is);
    case TagFormat::json:
        return read_json(is);
    }
    return {};
}

}  // namespace qdemux
