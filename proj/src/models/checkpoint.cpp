#include "gmnn/models/models.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

namespace gmnn::models {

std::string encode_base64(const std::vector<unsigned char>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<unsigned char> decode_base64(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::vector<unsigned char> out(3 * text.size() / 4 + 1);
  const int written = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                      static_cast<int>(text.size()));
  if (written < 0) throw std::invalid_argument("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes that padding stands for.
  std::size_t size = static_cast<std::size_t>(written);
  if (!text.empty() && text.back() == '=') --size;
  if (text.size() > 1 && text[text.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

template <typename T>
void save_network(const Network<T>& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << network_to_json(net).dump() << '\n';
}

template <typename T>
Network<T> load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return network_from_json<T>(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

template void save_network<float>(const Network<float>&, const std::filesystem::path&);
template void save_network<double>(const Network<double>&, const std::filesystem::path&);
template Network<float> load_network<float>(const std::filesystem::path&);
template Network<double> load_network<double>(const std::filesystem::path&);

}  // namespace gmnn::models
