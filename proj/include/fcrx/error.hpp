#pragma once

#include <stdexcept>
#include <string>

namespace fcrx {

enum class ErrorKind {
  usage,      // bad invocation / malformed request
  data,       // malformed or inconsistent input files
  numerical,  // NaN/Inf or divergence during optimization
  rewriter,   // rewriter endpoint required but unavailable
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error numerical_error(const std::string& what) { return Error(ErrorKind::numerical, what); }
inline Error rewriter_error(const std::string& what) { return Error(ErrorKind::rewriter, what); }

}  // namespace fcrx
