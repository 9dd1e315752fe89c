#include "stochdyn/parallel.hpp"

#include <exception>

namespace stochdyn {

void run_chunks(std::size_t n, unsigned workers,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(chunks, 1)));
  std::vector<std::exception_ptr> errors(chunks);
  auto task = [&](std::size_t c) {
    try {
      body(c, c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) task(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) task(c);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace stochdyn
