#pragma once

#include <stdexcept>
#include <string>

namespace shapematch {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SHAPEMATCH_DEFINE_ERROR(Name)                          \
  struct Name : Error {                                        \
    explicit Name(const std::string& msg) : Error(msg) {}      \
  }

// mesh_core
SHAPEMATCH_DEFINE_ERROR(ParseError);
SHAPEMATCH_DEFINE_ERROR(DegenerateMesh);
SHAPEMATCH_DEFINE_ERROR(DegenerateGeometry);
SHAPEMATCH_DEFINE_ERROR(DisconnectedMesh);

// spectral
SHAPEMATCH_DEFINE_ERROR(ConvergenceFailure);
SHAPEMATCH_DEFINE_ERROR(KTooLarge);

// descriptors
SHAPEMATCH_DEFINE_ERROR(DegenerateSpectrum);
SHAPEMATCH_DEFINE_ERROR(DegenerateFeatures);

// fmap / losses / conversion
SHAPEMATCH_DEFINE_ERROR(DimensionMismatch);
SHAPEMATCH_DEFINE_ERROR(GammaOutOfRange);
SHAPEMATCH_DEFINE_ERROR(SingularSystem);
SHAPEMATCH_DEFINE_ERROR(ProvenanceMismatch);
SHAPEMATCH_DEFINE_ERROR(NonFiniteLoss);
SHAPEMATCH_DEFINE_ERROR(BasisMeshMismatch);
SHAPEMATCH_DEFINE_ERROR(BasisTooSmall);

// theory / evaluation / cli
SHAPEMATCH_DEFINE_ERROR(RankDeficientDraw);
SHAPEMATCH_DEFINE_ERROR(LengthMismatch);
SHAPEMATCH_DEFINE_ERROR(EmptyInput);
SHAPEMATCH_DEFINE_ERROR(IoError);

#undef SHAPEMATCH_DEFINE_ERROR

}  // namespace shapematch
