#include "shapprop/types.hpp"

namespace shapprop {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Exact:
      return "exact";
    case Method::Rescale:
      return "rescale";
    case Method::RevealCancel:
      return "revealcancel";
    case Method::RevealCancelMean:
      return "revealcancel-mean";
    case Method::KernelShap:
      return "kernel";
    case Method::Ime:
      return "ime";
    case Method::Random:
      return "random";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "exact") return Method::Exact;
  if (s == "rescale") return Method::Rescale;
  if (s == "revealcancel") return Method::RevealCancel;
  if (s == "revealcancel-mean") return Method::RevealCancelMean;
  if (s == "kernel") return Method::KernelShap;
  if (s == "ime") return Method::Ime;
  if (s == "random") return Method::Random;
  throw ValidationError("unknown method: " + std::string(s));
}

}  // namespace shapprop
