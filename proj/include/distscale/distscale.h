#ifndef DISTSCALE_H
#define DISTSCALE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DISTSCALE_BUILDING)
#    define DS_API __declspec(dllexport)
#  else
#    define DS_API __declspec(dllimport)
#  endif
#else
#  define DS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
    DS_OK = 0,
    DS_ERR_INVALID_INPUT,
    DS_ERR_DEGENERATE_SYSTEM,
    DS_ERR_INFEASIBLE_TARGET,
    DS_ERR_PI_EVALUATION,
    DS_ERR_UNDEFINED_CORRELATION,
    DS_ERR_UNDEFINED_R2,
    DS_ERR_DISTORTION_UNDEFINED,
    DS_ERR_REFERENCE_SELECTION,
    DS_ERR_SINGULAR_MECHANISM,
    DS_ERR_TRAINING_DIVERGED,
    DS_ERR_DEGENERATE_SPLIT,
    DS_ERR_INVALID_FEATURE,
    DS_ERR_SCHEMA_MISMATCH,
    DS_ERR_NO_VALID_SET,
    DS_ERR_OVERFLOW,
    DS_ERR_IO,
    DS_ERR_PARSE,
    DS_ERR_INTERNAL
} ds_status;

/* Message of the last failure on the calling thread; valid until the next call. */
DS_API const char* ds_last_error(void);
DS_API const char* ds_status_name(ds_status status);
/* 0 success, 1 I/O or parse, 2 domain error. */
DS_API int ds_status_exit_code(ds_status status);

typedef struct ds_registry ds_registry;
typedef struct ds_dataset ds_dataset;
typedef struct ds_analysis ds_analysis;
typedef struct ds_pisets ds_pisets;
typedef struct ds_model ds_model;
typedef struct ds_grid ds_grid;
typedef struct ds_validation ds_validation;

/* Quantity registry (JSON). */
DS_API ds_status ds_registry_load(const char* path, ds_registry** out);
DS_API void ds_registry_free(ds_registry* registry);
DS_API size_t ds_registry_size(const ds_registry* registry);
/* Number of independent dimensionless groups, p - rank. */
DS_API ds_status ds_registry_pi_count(const ds_registry* registry, size_t* out);

/* Canonical dataset CSV read against a registry. */
DS_API ds_status ds_dataset_load(const ds_registry* registry, const char* path, int require_target,
                                 ds_dataset** out);
DS_API ds_status ds_dataset_save(const ds_dataset* data, const char* path);
DS_API size_t ds_dataset_size(const ds_dataset* data);
DS_API void ds_dataset_free(ds_dataset* data);

/* Synthetic multi-scale fleet from a TOML spec. */
DS_API ds_status ds_fleet_generate(const char* spec_path, uint64_t seed, unsigned threads, ds_dataset** out);

/* options_json may be NULL; keys: target, top_k, max_sets, max_abs_exponent,
   max_depth, valid_fraction_floor. */
DS_API ds_status ds_analyze(const ds_registry* registry, const ds_dataset* data, const char* options_json,
                            unsigned threads, ds_analysis** out);
DS_API size_t ds_analysis_size(const ds_analysis* analysis);
/* Display string of ranked set i; owned by the handle. */
DS_API const char* ds_analysis_describe(const ds_analysis* analysis, size_t index);
DS_API double ds_analysis_score(const ds_analysis* analysis, size_t index);
/* Writes pisets.json and ranking.csv into dir. */
DS_API ds_status ds_analysis_save(const ds_analysis* analysis, const char* dir);
DS_API void ds_analysis_free(ds_analysis* analysis);

/* Pi-set file; registry may be NULL when the file embeds one. */
DS_API ds_status ds_pisets_load(const char* path, const ds_registry* registry, ds_pisets** out);
/* Borrowed; lives as long as the pi-set handle. */
DS_API const ds_registry* ds_pisets_registry(const ds_pisets* pisets);
DS_API void ds_pisets_free(ds_pisets* pisets);

/* config_json: training configuration (reference, split, mlp, ...); may be NULL. */
DS_API ds_status ds_train(const ds_pisets* pisets, const ds_dataset* data, const char* config_json, uint64_t seed,
                          ds_model** out);
DS_API ds_status ds_model_save(const ds_model* model, const char* path);
/* Audit dump of the training pairs; fails for loaded models. */
DS_API ds_status ds_model_save_pairs(const ds_model* model, const char* path);
DS_API ds_status ds_model_load(const char* path, ds_model** out);
DS_API void ds_model_metrics(const ds_model* model, double* r2_train, double* r2_val);
/* Borrowed; lives as long as the model handle. */
DS_API const ds_registry* ds_model_registry(const ds_model* model);
DS_API void ds_model_free(ds_model* model);

DS_API ds_status ds_gridsearch(const ds_pisets* pisets, const ds_dataset* data, const char* config_json,
                               uint64_t seed, unsigned threads, ds_grid** out);
DS_API size_t ds_grid_size(const ds_grid* grid);
DS_API size_t ds_grid_marginal_size(const ds_grid* grid);
DS_API ds_status ds_grid_marginal(const ds_grid* grid, size_t index, int* units, double* mean_r2);
/* Writes grid.csv, grid_pivot.csv, grid_marginal.csv and SVG figures into dir. */
DS_API ds_status ds_grid_save(const ds_grid* grid, const char* dir);
DS_API void ds_grid_free(ds_grid* grid);

/* Predicts the target for every record of data and writes a CSV. */
DS_API ds_status ds_scale(const ds_model* model, const ds_dataset* data, const char* out_path);

/* options_json may be NULL; keys: machines, skip_reference, error_floor. */
DS_API ds_status ds_validate(const ds_model* model, const ds_dataset* data, const char* options_json,
                             ds_validation** out);
DS_API void ds_validation_means(const ds_validation* report, double* learned_pct, double* baseline_pct,
                                double* r2_delta);
DS_API size_t ds_validation_size(const ds_validation* report);
/* Writes summary.csv, error_curve.csv, error_vs_load.svg and delta_scatter.svg into dir. */
DS_API ds_status ds_validation_save(const ds_validation* report, const char* dir);
DS_API void ds_validation_free(ds_validation* report);

#ifdef __cplusplus
}
#endif

#endif
