#include "breakeven/error.hpp"

#include <omp.h>

#include "breakeven/parallel.hpp"

namespace breakeven {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BnBatchStatsUnsupported: return "BnBatchStatsUnsupported";
    case ErrorKind::BnUnsupported: return "BnUnsupported";
    case ErrorKind::ZeroDirection: return "ZeroDirection";
    case ErrorKind::NoBnLayer: return "NoBnLayer";
    case ErrorKind::DegenerateOffset: return "DegenerateOffset";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateProjection: return "DegenerateProjection";
    case ErrorKind::InsufficientCheckpoints: return "InsufficientCheckpoints";
    case ErrorKind::CsvParse: return "CsvParse";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NeedTwoValues: return "NeedTwoValues";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::UnknownMetric: return "UnknownMetric";
  }
  return "Unknown";
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace breakeven
