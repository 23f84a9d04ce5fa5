#pragma once

#include <stdexcept>
#include <string>

namespace csvddnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define CSVDDNET_ERROR_TYPE(Name)      \
  struct Name : Error {                \
    using Error::Error;                \
  };

// ingest
CSVDDNET_ERROR_TYPE(BadMagic)
CSVDDNET_ERROR_TYPE(TruncatedPayload)
CSVDDNET_ERROR_TYPE(DimensionMismatch)
CSVDDNET_ERROR_TYPE(UnsupportedFormat)
CSVDDNET_ERROR_TYPE(ImageTooSmall)

// preprocess
CSVDDNET_ERROR_TYPE(DegenerateCovariance)

// dictionary
CSVDDNET_ERROR_TYPE(TooFewPoints)

// balls
CSVDDNET_ERROR_TYPE(EmptyCluster)
CSVDDNET_ERROR_TYPE(NotConverged)
CSVDDNET_ERROR_TYPE(InfeasibleLambda)

// encoder
CSVDDNET_ERROR_TYPE(BallMismatch)

// pipeline
CSVDDNET_ERROR_TYPE(MapTooSmall)

// learner
CSVDDNET_ERROR_TYPE(LabelOutOfRange)
CSVDDNET_ERROR_TYPE(MissingView)
CSVDDNET_ERROR_TYPE(RankDeficient)

// retrieval
CSVDDNET_ERROR_TYPE(MissingTruth)

// cli / formats
CSVDDNET_ERROR_TYPE(ConfigError)
CSVDDNET_ERROR_TYPE(BundleError)

#undef CSVDDNET_ERROR_TYPE

}  // namespace csvddnet
