#include "shmssl/error.hpp"

namespace shmssl {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Config: return "config";
        case ErrorKind::Format: return "format";
        case ErrorKind::Io: return "io";
        case ErrorKind::MissingData: return "missing_data";
        case ErrorKind::Input: return "input";
        case ErrorKind::Divergence: return "divergence";
    }
    return "unknown";
}

}  // namespace shmssl
