#include "divs/parallel.hpp"

#include <stdexcept>
#include <thread>
#include <vector>

namespace divs {

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (workers < 1) throw std::invalid_argument("parallel_for: workers must be >= 1");
    if (count == 0) return;

    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    if (w == 1) {
        body(0, count);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(w - 1);
    for (std::size_t i = 0; i < w; ++i) {
        const std::size_t begin = count * i / w;
        const std::size_t end = count * (i + 1) / w;
        if (i + 1 == w) {
            body(begin, end);  // run the last chunk on the calling thread
        } else {
            pool.emplace_back([&body, begin, end] { body(begin, end); });
        }
    }
    for (auto& t : pool) t.join();
}

}  // namespace divs
