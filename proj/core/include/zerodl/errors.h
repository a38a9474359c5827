// Copyright 2026 The zerodl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZERODL_ERRORS_H_
#define ZERODL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace zerodl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Input data is well-formed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A record could not be parsed. `line()` is 1-based; 0 means "not line bound".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Network failure, timeout, HTTP 429 or 5xx. Retried by the gateway.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, int http_status = 0)
      : Error(what), http_status_(http_status) {}
  int http_status() const { return http_status_; }

 private:
  int http_status_;
};

// Non-retryable rejection (HTTP 4xx other than 429).
class RequestError : public Error {
 public:
  RequestError(const std::string& what, int http_status)
      : Error(what), http_status_(http_status) {}
  int http_status() const { return http_status_; }

 private:
  int http_status_;
};

// Every open-ended prediction occurred once; nothing left to aggregate.
class EmptyHistogramError : public Error {
 public:
  using Error::Error;
};

// Too many stage failures to continue a run.
class RunAbortedError : public Error {
 public:
  using Error::Error;
};

}  // namespace zerodl

#endif  // ZERODL_ERRORS_H_
