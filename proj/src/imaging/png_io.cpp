#include "occu/png_io.hpp"

#include <fcntl.h>
#include <png.h>
#include <unistd.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <string>

#include "occu/error.hpp"

namespace occu {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) {
    png_error(png, "unexpected end of PNG data");
  }
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

// libpng reports through longjmp; the message is stashed here so the caller
// can rethrow it as an Error once the stack is back in C++ land.
struct ErrorSink {
  std::string message;
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  if (sink) sink->message = msg ? msg : "libpng error";
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

class PngReader {
 public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink_, on_png_error,
                                  on_png_warning);
    if (png_) info_ = png_create_info_struct(png_);
    if (!png_ || !info_) throw Error(ErrorCode::kIOFailure, "libpng allocation failed");
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }
  const std::string& message() const { return sink_.message; }

 private:
  ErrorSink sink_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
 public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink_, on_png_error,
                                   on_png_warning);
    if (png_) info_ = png_create_info_struct(png_);
    if (!png_ || !info_) throw Error(ErrorCode::kIOFailure, "libpng allocation failed");
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }
  const std::string& message() const { return sink_.message; }

 private:
  ErrorSink sink_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

constexpr std::size_t kSignatureBytes = 8;

struct PngHeader {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::size_t row_bytes = 0;
  bool sixteen_bit = false;
};

// libpng unwinds with longjmp, so the setjmp frames below hold only trivially
// destructible locals; buffers are owned by the caller.
bool read_header(PngReader& reader, ReadCursor& cursor, PngHeader& header) {
  png_structp png = reader.png();
  png_infop info = reader.info();
  if (setjmp(png_jmpbuf(png))) return false;

  png_set_read_fn(png, &cursor, read_from_span);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    header.sixteen_bit = true;
    return true;
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  header.width = static_cast<int>(png_get_image_width(png, info));
  header.height = static_cast<int>(png_get_image_height(png, info));
  header.channels = png_get_channels(png, info);
  header.row_bytes = png_get_rowbytes(png, info);
  return true;
}

bool read_rows(PngReader& reader, png_bytepp rows) {
  png_structp png = reader.png();
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool encode_into(PngWriter& writer, const ImageBuffer& img,
                 std::vector<std::uint8_t>& out) {
  png_structp png = writer.png();
  png_infop info = writer.info();
  if (setjmp(png_jmpbuf(png))) return false;

  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  const int color_type = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride =
      static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(img.channels());
  auto* base = const_cast<std::uint8_t*>(img.data().data());
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, base + static_cast<std::size_t>(y) * stride);
  }
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes, int max_dimension) {
  if (bytes.size() < kSignatureBytes ||
      png_sig_cmp(bytes.data(), 0, kSignatureBytes) != 0) {
    throw Error(ErrorCode::kMalformedFile, "not a PNG file");
  }
  PngReader reader;
  ReadCursor cursor{bytes, 0};
  PngHeader header;
  if (!read_header(reader, cursor, header)) {
    throw Error(ErrorCode::kMalformedFile, "PNG decode failed: " + reader.message());
  }
  if (max_dimension > 0 && (header.width > max_dimension || header.height > max_dimension)) {
    throw Error(ErrorCode::kTooLarge, "image is " + std::to_string(header.width) + "x" +
                                          std::to_string(header.height) + ", limit is " +
                                          std::to_string(max_dimension) + " per side");
  }
  if (header.sixteen_bit) {
    throw Error(ErrorCode::kUnsupportedFormat, "16-bit PNG samples are not supported");
  }
  if (header.channels != 1 && header.channels != 3) {
    throw Error(ErrorCode::kUnsupportedFormat, "unexpected PNG channel layout");
  }
  std::vector<std::uint8_t> data(header.row_bytes *
                                 static_cast<std::size_t>(header.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(header.height));
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = data.data() + y * header.row_bytes;
  if (!read_rows(reader, rows.data())) {
    throw Error(ErrorCode::kMalformedFile, "PNG decode failed: " + reader.message());
  }
  return ImageBuffer(header.width, header.height, header.channels, std::move(data));
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty image");
  PngWriter writer;
  std::vector<std::uint8_t> out;
  if (!encode_into(writer, img, out)) {
    throw Error(ErrorCode::kIOFailure, "PNG encode failed: " + writer.message());
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIOFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIOFailure, "cannot create " + tmp.string());
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::kIOFailure, "short write to " + tmp.string());
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kIOFailure, "fsync failed for " + tmp.string());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIOFailure, "rename failed: " + ec.message());
}

ImageBuffer load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_png(const std::filesystem::path& path, const ImageBuffer& img) {
  write_file_atomic(path, encode_png(img));
}

MaskImage load_mask(const std::filesystem::path& path) {
  return MaskImage::from_image(load_image(path));
}

}  // namespace occu
