#include "blockprnu/parallel.hpp"

#include <cstdlib>

#include "blockprnu/text.hpp"

namespace blockprnu {

int default_worker_count() {
    if (const char* env = std::getenv("BLOCKPRNU_WORKERS")) {
        long long n = 0;
        if (parse_int(env, n) && n >= 1) return static_cast<int>(std::min<long long>(n, 1024));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace blockprnu
