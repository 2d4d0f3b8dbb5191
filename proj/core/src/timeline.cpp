#include "avsync/timeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

}  // namespace

std::string_view to_string(EventLabel label) {
  switch (label) {
    case EventLabel::Hit:
      return "hit";
    case EventLabel::Bounce:
      return "bounce";
    case EventLabel::Neither:
      return "neither";
  }
  return "neither";
}

EventLabel parse_label(std::string_view text) {
  const auto lower = lowercase(trim(text));
  if (lower == "hit") return EventLabel::Hit;
  if (lower == "bounce") return EventLabel::Bounce;
  if (lower == "neither") return EventLabel::Neither;
  throw FormatError("unknown event label '" + std::string(text) + "'");
}

void ClockSpec::validate() const {
  if (fps <= 0 || sample_rate <= 0) {
    throw ConfigError("fps and sample_rate must be positive");
  }
  if (sample_rate % fps != 0) {
    throw ConfigError("sample_rate " + std::to_string(sample_rate) +
                      " is not a multiple of fps " + std::to_string(fps));
  }
}

LabelTrack::LabelTrack(ClockSpec clock, std::vector<EventLabel> labels)
    : clock_(clock), labels_(std::move(labels)) {
  clock_.validate();
}

EventLabel LabelTrack::at(std::int64_t frame) const {
  if (frame < 0 || frame >= size()) {
    throw RangeError("frame " + std::to_string(frame) + " outside label track of length " +
                     std::to_string(size()));
  }
  return labels_[static_cast<std::size_t>(frame)];
}

std::vector<std::int64_t> LabelTrack::frames_with(EventLabel label) const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::int64_t LabelTrack::count(EventLabel label) const {
  return std::count(labels_.begin(), labels_.end(), label);
}

LabelTrack LabelTrack::truncated(std::int64_t frames) const {
  const auto n = std::clamp<std::int64_t>(frames, 0, size());
  return LabelTrack(clock_, std::vector<EventLabel>(labels_.begin(), labels_.begin() + n));
}

SegmentGrid::SegmentGrid(ClockSpec clock, std::int64_t total_samples, std::int64_t segment_len)
    : clock_(clock),
      total_samples_(total_samples),
      segment_len_(segment_len),
      stride_(clock.samples_per_frame()) {
  clock_.validate();
  if (total_samples < 0) throw ConfigError("total_samples must be non-negative");
  if (segment_len <= 0) throw ConfigError("segment_len must be positive");
}

SegmentGrid SegmentGrid::for_frames(ClockSpec clock, std::int64_t frames,
                                    std::int64_t segment_len) {
  clock.validate();
  return SegmentGrid(clock, frames * clock.samples_per_frame(), segment_len);
}

std::int64_t SegmentGrid::segment_count() const {
  if (total_samples_ < segment_len_) return 0;
  return (total_samples_ - segment_len_) / stride_ + 1;
}

std::int64_t SegmentGrid::aligned_count(const LabelTrack& track) const {
  return std::min(segment_count(), track.size());
}

SampleRange segment_sample_range(const SegmentGrid& grid, std::int64_t i) {
  if (i < 0) throw RangeError("negative segment index " + std::to_string(i));
  const auto begin = i * grid.stride();
  return {begin, begin + grid.segment_len()};
}

EventLabel segment_label(const LabelTrack& track, const SegmentGrid& grid, std::int64_t i) {
  if (i < 0 || i >= grid.segment_count()) {
    throw RangeError("segment " + std::to_string(i) + " outside grid of " +
                     std::to_string(grid.segment_count()) + " segments");
  }
  return track.at(i);
}

std::array<std::int64_t, BlockSpec::kLength> block_frames(const BlockSpec& block) {
  return {block.start_frame, block.start_frame + 1, block.start_frame + 2};
}

LabelTrack read_label_track(std::istream& in, ClockSpec clock, bool csv) {
  std::vector<EventLabel> labels;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  auto push = [&](std::int64_t frame, EventLabel label) {
    if (frame != static_cast<std::int64_t>(labels.size())) {
      throw FormatError("label frames must be contiguous from 0: expected frame " +
                        std::to_string(labels.size()) + ", got " + std::to_string(frame) +
                        at_line(line_no));
    }
    labels.push_back(label);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (csv) {
      if (!header_seen) {
        if (lowercase(text) != "frame,label") {
          throw FormatError("label CSV must start with header 'frame,label'" + at_line(line_no));
        }
        header_seen = true;
        continue;
      }
      const auto comma = text.find(',');
      if (comma == std::string_view::npos) {
        throw FormatError("expected 'frame,label'" + at_line(line_no));
      }
      std::int64_t frame = 0;
      try {
        std::size_t used = 0;
        const std::string frame_text(trim(text.substr(0, comma)));
        frame = std::stoll(frame_text, &used);
        if (used != frame_text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("bad frame index" + at_line(line_no));
      }
      EventLabel label{};
      try {
        label = parse_label(text.substr(comma + 1));
      } catch (const FormatError& e) {
        throw FormatError(e.what() + at_line(line_no));
      }
      push(frame, label);
    } else {
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what() + at_line(line_no));
      }
      if (!record.is_object() || !record.contains("frame") || !record.contains("label") ||
          !record["frame"].is_number_integer() || !record["label"].is_string()) {
        throw FormatError("record needs integer 'frame' and string 'label'" + at_line(line_no));
      }
      EventLabel label{};
      try {
        label = parse_label(record["label"].get<std::string>());
      } catch (const FormatError& e) {
        throw FormatError(e.what() + at_line(line_no));
      }
      push(record["frame"].get<std::int64_t>(), label);
    }
  }
  if (csv && !header_seen) throw FormatError("empty label CSV (missing header)");
  return LabelTrack(clock, std::move(labels));
}

LabelTrack read_label_track(const std::filesystem::path& path, ClockSpec clock) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label file " + path.string());
  const bool csv = lowercase(path.extension().string()) == ".csv";
  return read_label_track(in, clock, csv);
}

void write_label_jsonl(std::ostream& out, const LabelTrack& track) {
  const auto labels = track.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << "{\"frame\":" << i << ",\"label\":\"" << to_string(labels[i]) << "\"}\n";
  }
}

void write_label_jsonl(const std::filesystem::path& path, const LabelTrack& track) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write label file " + path.string());
  write_label_jsonl(out, track);
}

}  // namespace avsync
