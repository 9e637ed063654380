#include "ostrograd.h"

#include <cstring>
#include <new>
#include <string>

#include "ostrograd/error.hpp"
#include "ostrograd/model.hpp"
#include "ostrograd/report.hpp"

struct ostrograd_model {
  ostrograd::ModelFile file;
};

namespace {

thread_local std::string last_error;

ostrograd_status status_of(ostrograd::ErrorKind k) {
  using ostrograd::ErrorKind;
  switch (k) {
    case ErrorKind::Parse: return OSTROGRAD_ERR_PARSE;
    case ErrorKind::Semantic: return OSTROGRAD_ERR_SEMANTIC;
    case ErrorKind::Argument: return OSTROGRAD_ERR_ARGUMENT;
    case ErrorKind::Evaluation:
    case ErrorKind::Convergence: return OSTROGRAD_ERR_NUMERIC;
    case ErrorKind::Singular: return OSTROGRAD_ERR_SINGULAR;
    case ErrorKind::Internal: break;
  }
  return OSTROGRAD_ERR_INTERNAL;
}

template <class F>
ostrograd_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return OSTROGRAD_OK;
  } catch (const ostrograd::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("invalid options JSON: ") + e.what();
    return OSTROGRAD_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return OSTROGRAD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return OSTROGRAD_ERR_INTERNAL;
  }
}

char* copy_out(const std::string& s) {
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

ostrograd_status null_argument(const char* what) {
  last_error = std::string(what) + " must not be null";
  return OSTROGRAD_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

ostrograd_status ostrograd_model_parse(const char* text, ostrograd_model** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new ostrograd_model{ostrograd::parse_model(text)}; });
}

ostrograd_status ostrograd_model_load(const char* path, ostrograd_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new ostrograd_model{ostrograd::load_model(path)}; });
}

void ostrograd_model_free(ostrograd_model* model) { delete model; }

ostrograd_status ostrograd_model_print(const ostrograd_model* model, char** out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = copy_out(ostrograd::print_model(model->file)); });
}

ostrograd_status ostrograd_run(const ostrograd_model* model, const char* command, const char* options_json,
                               char** out_json) {
  if (!model) return null_argument("model");
  if (!command) return null_argument("command");
  if (!out_json) return null_argument("out_json");
  *out_json = nullptr;
  return guarded([&] {
    nlohmann::json opts = options_json && *options_json ? nlohmann::json::parse(options_json) : nlohmann::json();
    auto report = ostrograd::run_report(model->file, command, ostrograd::ReportOptions::from_json(opts));
    *out_json = copy_out(report.dump());
  });
}

void ostrograd_string_free(char* s) { delete[] s; }

const char* ostrograd_last_error(void) { return last_error.c_str(); }

const char* ostrograd_status_name(ostrograd_status status) {
  switch (status) {
    case OSTROGRAD_OK: return "ok";
    case OSTROGRAD_ERR_PARSE: return "parse error";
    case OSTROGRAD_ERR_SEMANTIC: return "semantic error";
    case OSTROGRAD_ERR_ARGUMENT: return "argument error";
    case OSTROGRAD_ERR_NUMERIC: return "numeric error";
    case OSTROGRAD_ERR_SINGULAR: return "singular";
    case OSTROGRAD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ostrograd_version(void) { return "0.1.0"; }

}  // extern "C"
