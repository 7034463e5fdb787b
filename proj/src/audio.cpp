#include "adcorpus/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "adcorpus/error.hpp"
#include "adcorpus/fft.hpp"

namespace adcorpus::audio {

AudioTrack::AudioTrack(std::vector<std::vector<double>> channels, int sample_rate)
    : channels_(std::move(channels)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) fail(ErrorKind::BadParam, "sample rate must be positive");
  if (channels_.empty() || channels_.size() > 2) fail(ErrorKind::BadParam, "track must have 1 or 2 channels");
  for (const auto& c : channels_)
    if (c.size() != channels_.front().size()) fail(ErrorKind::LengthMismatch, "channels differ in length");
}

AudioTrack AudioTrack::mono(std::vector<double> samples, int sample_rate) {
  std::vector<std::vector<double>> ch;
  ch.push_back(std::move(samples));
  return AudioTrack(std::move(ch), sample_rate);
}

AudioTrack AudioTrack::stereo(std::vector<double> left, std::vector<double> right, int sample_rate) {
  std::vector<std::vector<double>> ch;
  ch.push_back(std::move(left));
  ch.push_back(std::move(right));
  return AudioTrack(std::move(ch), sample_rate);
}

// ---------------------------------------------------------------------------
// RIFF/WAVE

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t rd16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t rd32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

AudioTrack load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(ErrorKind::Format, "not a RIFF/WAVE file" + where);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = rd32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) fail(ErrorKind::Format, "truncated fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      format = rd16(f);
      channels = rd16(f + 2);
      rate = rd32(f + 4);
      block_align = rd16(f + 12);
      bits = rd16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(ErrorKind::Format, "truncated extensible fmt chunk" + where);
        format = rd16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (body + size > bytes.size()) fail(ErrorKind::Format, "truncated data chunk" + where);
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) fail(ErrorKind::Format, "missing fmt chunk" + where);
  if (data == nullptr) fail(ErrorKind::Format, "missing data chunk" + where);
  if (channels < 1 || channels > 2) fail(ErrorKind::Format, std::to_string(channels) + " channels unsupported" + where);
  if (rate == 0) fail(ErrorKind::Format, "zero sample rate" + where);

  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == kFormatFloat && bits == 32;
  if (!pcm && !flt)
    fail(ErrorKind::Format, "unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                                " bits)" + where);
  const std::size_t width = bits / 8;
  if (block_align != width * channels) fail(ErrorKind::Format, "inconsistent block alignment" + where);
  if (data_size % block_align != 0) fail(ErrorKind::Format, "data chunk is not a whole number of frames" + where);

  const std::size_t n = data_size / block_align;
  std::vector<std::vector<double>> out(channels, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * block_align + c * width;
      double v = 0.0;
      if (flt) {
        float f;
        const std::uint32_t raw = rd32(s);
        std::memcpy(&f, &raw, sizeof f);
        v = f;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(rd16(s)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = static_cast<std::int32_t>(s[0] | (s[1] << 8) | (s[2] << 16));
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(rd32(s)) / 2147483648.0;
      }
      out[c][i] = v;
    }
  }
  return AudioTrack(std::move(out), static_cast<int>(rate));
}

void write_wav(const AudioTrack& track, const std::filesystem::path& path, BitDepth depth) {
  const std::uint16_t channels = static_cast<std::uint16_t>(track.channels());
  const std::uint16_t width = depth == BitDepth::Pcm16 ? 2 : 4;
  const std::uint32_t data_size = static_cast<std::uint32_t>(track.frames() * channels * width);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, depth == BitDepth::Pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, channels);
  put32(out, static_cast<std::uint32_t>(track.sample_rate()));
  put32(out, static_cast<std::uint32_t>(track.sample_rate()) * channels * width);
  put16(out, static_cast<std::uint16_t>(channels * width));
  put16(out, static_cast<std::uint16_t>(8 * width));
  out += "data";
  put32(out, data_size);

  for (std::size_t i = 0; i < track.frames(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(track.channel(c)[i], -1.0, 1.0);
      if (depth == BitDepth::Pcm16) {
        const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        const float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put32(out, raw);
      }
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) fail(ErrorKind::Io, "short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Channel transforms

AudioTrack to_mono(const AudioTrack& track) {
  if (track.channels() == 1) return track;
  const auto& l = track.channel(0);
  const auto& r = track.channel(1);
  std::vector<double> m(l.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (l[i] + r[i]);
  return AudioTrack::mono(std::move(m), track.sample_rate());
}

std::pair<AudioTrack, AudioTrack> mid_side(const AudioTrack& track) {
  if (track.channels() != 2) fail(ErrorKind::NotStereo, "mid/side needs a stereo track");
  const auto& l = track.channel(0);
  const auto& r = track.channel(1);
  std::vector<double> mid(l.size()), side(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    mid[i] = 0.5 * (l[i] + r[i]);
    side[i] = 0.5 * (l[i] - r[i]);
  }
  return {AudioTrack::mono(std::move(mid), track.sample_rate()), AudioTrack::mono(std::move(side), track.sample_rate())};
}

// ---------------------------------------------------------------------------
// Framed analysis

Framing frame_layout(std::size_t n, int sample_rate, double frame_sec, double hop_sec) {
  if (!(frame_sec > 0.0) || !(hop_sec > 0.0)) fail(ErrorKind::BadParam, "frame and hop must be positive");
  Framing f;
  f.frame_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frame_sec * sample_rate)));
  f.hop_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(hop_sec * sample_rate)));
  if (n == 0) return f;
  if (n < f.frame_len) {
    f.starts.push_back(0);
    return f;
  }
  const std::size_t full = (n - f.frame_len) / f.hop_len + 1;
  for (std::size_t i = 0; i < full; ++i) f.starts.push_back(i * f.hop_len);
  const std::size_t next = full * f.hop_len;
  if (next < n && 2 * (n - next) >= f.frame_len) f.starts.push_back(next);
  return f;
}

namespace {

const std::vector<double>& require_mono(const AudioTrack& track, const char* op) {
  if (track.empty()) fail(ErrorKind::EmptyInput, std::string(op) + " on an empty track");
  if (track.channels() != 1) fail(ErrorKind::BadParam, std::string(op) + " expects a mono track");
  return track.channel(0);
}

}  // namespace

Envelope energy_envelope(const AudioTrack& track, double frame_sec, double hop_sec) {
  const auto& x = require_mono(track, "energy_envelope");
  const Framing f = frame_layout(x.size(), track.sample_rate(), frame_sec, hop_sec);
  const double rate = track.sample_rate();

  Envelope env;
  env.frame_sec = static_cast<double>(f.frame_len) / rate;
  env.hop_sec = static_cast<double>(f.hop_len) / rate;
  env.origin_sec = 0.5 * env.frame_sec;
  env.values.reserve(f.starts.size());
  for (const std::size_t s : f.starts) {
    const std::size_t e = std::min(x.size(), s + f.frame_len);
    double acc = 0.0;
    for (std::size_t i = s; i < e; ++i) acc += x[i] * x[i];
    env.values.push_back(std::sqrt(acc / static_cast<double>(e - s)));
  }
  return env;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

Spectrogram spectrogram(const AudioTrack& track, double frame_sec, double hop_sec) {
  const auto& x = require_mono(track, "spectrogram");
  const Framing f = frame_layout(x.size(), track.sample_rate(), frame_sec, hop_sec);
  const double rate = track.sample_rate();
  const std::size_t nfft = fft::next_pow2(f.frame_len);
  const auto window = hann_window(f.frame_len);

  Spectrogram spec;
  spec.bins = nfft / 2 + 1;
  spec.frame_sec = static_cast<double>(f.frame_len) / rate;
  spec.hop_sec = static_cast<double>(f.hop_len) / rate;
  spec.origin_sec = 0.5 * spec.frame_sec;
  spec.magnitudes.reserve(f.starts.size() * spec.bins);

  std::vector<std::complex<double>> buf(nfft);
  for (const std::size_t s : f.starts) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    const std::size_t e = std::min(x.size(), s + f.frame_len);
    for (std::size_t i = s; i < e; ++i) buf[i - s] = x[i] * window[i - s];
    fft::forward(buf);
    for (std::size_t k = 0; k < spec.bins; ++k) spec.magnitudes.push_back(std::abs(buf[k]));
  }
  return spec;
}

}  // namespace adcorpus::audio
