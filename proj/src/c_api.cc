#include "dialectid/c_api.h"

#include <exception>
#include <new>
#include <string>
#include <vector>

#include "dialectid/classify.h"
#include "dialectid/cxg.h"
#include "dialectid/error.h"
#include "dialectid/pipeline.h"
#include "dialectid/text.h"

struct dlid_grammar {
  dialectid::Grammar grammar;
};

struct dlid_lexicon {
  dialectid::Lexicon lexicon;
};

struct dlid_model {
  dialectid::LinearModel model;
};

struct dlid_config {
  dialectid::RunConfig config;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
dlid_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DLID_OK;
  } catch (const dialectid::Error& e) {
    last_error = e.what();
    return static_cast<dlid_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DLID_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DLID_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) {
    throw dialectid::Error(dialectid::ErrorCode::kInvalidArgument,
                           std::string(what) + " must not be NULL");
  }
}

}  // namespace

extern "C" {

const char* dlid_version(void) { return dialectid::kVersion; }

const char* dlid_status_string(dlid_status status) {
  if (status == DLID_OK) return "ok";
  return dialectid::error_code_name(static_cast<dialectid::ErrorCode>(status));
}

const char* dlid_last_error(void) { return last_error.c_str(); }

dlid_status dlid_grammar_parse(const char* text, const char* name, dlid_grammar** out) {
  return guarded([&] {
    require(text && out, "text and out");
    *out = new dlid_grammar{dialectid::parse_grammar(text, name ? name : "grammar")};
  });
}

dlid_status dlid_grammar_load(const char* path, const char* name, dlid_grammar** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new dlid_grammar{dialectid::load_grammar(path, name ? name : "")};
  });
}

size_t dlid_grammar_size(const dlid_grammar* grammar) {
  return grammar ? grammar->grammar.size() : 0;
}

void dlid_grammar_free(dlid_grammar* grammar) { delete grammar; }

dlid_status dlid_lexicon_parse(const char* tsv, dlid_lexicon** out) {
  return guarded([&] {
    require(tsv && out, "tsv and out");
    *out = new dlid_lexicon{dialectid::Lexicon::parse(tsv)};
  });
}

dlid_status dlid_lexicon_load(const char* path, dlid_lexicon** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new dlid_lexicon{dialectid::Lexicon::load(path)};
  });
}

size_t dlid_lexicon_size(const dlid_lexicon* lexicon) {
  return lexicon ? lexicon->lexicon.size() : 0;
}

void dlid_lexicon_free(dlid_lexicon* lexicon) { delete lexicon; }

dlid_status dlid_count_matches(const dlid_grammar* grammar, const dlid_lexicon* lexicon,
                               const char* text, uint32_t* counts, size_t counts_len) {
  return guarded([&] {
    require(grammar && lexicon && text && counts, "grammar, lexicon, text and counts");
    if (counts_len < grammar->grammar.size()) {
      throw dialectid::Error(dialectid::ErrorCode::kInvalidArgument,
                             "counts buffer is smaller than the grammar");
    }
    const auto words = dialectid::split_words(text);
    const auto tokens = dialectid::annotate(words, lexicon->lexicon);
    const auto c = dialectid::count_matches(grammar->grammar, tokens);
    std::copy(c.begin(), c.end(), counts);
  });
}

dlid_status dlid_model_load(const char* path, dlid_model** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new dlid_model{dialectid::LinearModel::load(path)};
  });
}

size_t dlid_model_num_classes(const dlid_model* model) {
  return model ? model->model.num_classes() : 0;
}

uint32_t dlid_model_dim(const dlid_model* model) { return model ? model->model.dim() : 0; }

const char* dlid_model_class_label(const dlid_model* model, size_t k) {
  if (!model || k >= model->model.num_classes()) return nullptr;
  return model->model.classes()[k].c_str();
}

const char* dlid_model_space(const dlid_model* model) {
  return model ? model->model.space_id().c_str() : nullptr;
}

dlid_status dlid_model_predict_sparse(const dlid_model* model, const char* space,
                                      const uint32_t* indices, const double* values,
                                      size_t nnz, size_t* class_out) {
  return guarded([&] {
    require(model && space && class_out, "model, space and class_out");
    require(nnz == 0 || (indices && values), "indices and values");
    dialectid::SparseVector x;
    for (size_t i = 0; i < nnz; ++i) {
      if (indices[i] >= model->model.dim() || (i > 0 && indices[i] <= indices[i - 1])) {
        throw dialectid::Error(dialectid::ErrorCode::kInvalidArgument,
                               "indices must be increasing and below the model dim");
      }
      x.index.push_back(indices[i]);
      x.value.push_back(values[i]);
    }
    const std::string& label = model->model.predict(x, space);
    const auto& classes = model->model.classes();
    *class_out = static_cast<size_t>(std::find(classes.begin(), classes.end(), label) -
                                     classes.begin());
  });
}

void dlid_model_free(dlid_model* model) { delete model; }

dlid_status dlid_config_create(dlid_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dlid_config{};
  });
}

dlid_status dlid_config_load(const char* path, dlid_config** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new dlid_config{dialectid::RunConfig::load(path)};
  });
}

dlid_status dlid_config_set(dlid_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value");
    config->config.set(key, value);
  });
}

dlid_status dlid_config_validate(const dlid_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.validate();
  });
}

void dlid_config_free(dlid_config* config) { delete config; }

dlid_status dlid_run(const dlid_config* config, const char* const* stages, size_t n_stages,
                     dlid_log_fn log, void* user) {
  return guarded([&] {
    require(config, "config");
    require(n_stages == 0 || stages, "stages");
    std::vector<dialectid::Stage> list;
    for (size_t i = 0; i < n_stages; ++i) list.push_back(dialectid::parse_stage(stages[i]));
    dialectid::LogFn fn;
    if (log) fn = [log, user](const std::string& line) { log(line.c_str(), user); };
    dialectid::run_pipeline(config->config, list, fn);
  });
}

}  // extern "C"
