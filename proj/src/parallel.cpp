#include <cstdlib>
#include <string>

#include "mfvis/parallel.hpp"

namespace mfvis {

int thread_count() {
    if (const char* env = std::getenv("MFVIS_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) {
                return n;
            }
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace mfvis
