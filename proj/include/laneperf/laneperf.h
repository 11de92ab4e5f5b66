/*
 * Copyright 2026 The LanePerf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the lane-detection performance estimation library.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Functions return LP_OK on success; on failure they return an error code
 * and leave a human-readable message in lp_error_message() (thread-local).
 * Strings returned through char** outputs are owned by the caller and must
 * be released with lp_string_free().
 */

#ifndef LANEPERF_LANEPERF_H
#define LANEPERF_LANEPERF_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lp_status {
  LP_OK = 0,
  LP_ERR_USAGE = 1,   /* bad arguments / misuse of the API */
  LP_ERR_DATA = 2,    /* malformed or inconsistent input data */
  LP_ERR_PARTIAL = 3, /* some requested methods failed, others succeeded */
  LP_ERR_INTERNAL = 4
} lp_status;

typedef struct lp_manifest lp_manifest;
typedef struct lp_corpus lp_corpus;
typedef struct lp_bundle lp_bundle; /* calibration artifacts + trained weights */

/* Last error message of the calling thread; empty string if none. */
const char* lp_error_message(void);

void lp_string_free(char* s);

/* --- Manifest ---------------------------------------------------------- */

lp_status lp_manifest_open(const char* path, lp_manifest** out);
void lp_manifest_close(lp_manifest* m);
/* Pointer valid for the lifetime of the manifest handle. */
const char* lp_manifest_fingerprint(const lp_manifest* m);

/* --- Corpus ------------------------------------------------------------ */

/* Loads every declared segment and chunks it into mini-datasets.
 * minidataset_size_override <= 0 uses the manifest value. */
lp_status lp_corpus_load(const lp_manifest* m, int minidataset_size_override,
                         lp_corpus** out);
void lp_corpus_close(lp_corpus* c);

/* role: "source_train_ref", "source_val", "target", or NULL for all. */
int lp_corpus_count(const lp_corpus* c, const char* role);
/* Pointer valid for the lifetime of the corpus handle; NULL if out of range. */
const char* lp_corpus_dataset_id(const lp_corpus* c, const char* role, int index);

/* --- Ground-truth evaluation ------------------------------------------- */

lp_status lp_eval_f1(const lp_manifest* m, const lp_corpus* c, const char* role,
                     int index, double* precision, double* recall, double* f1);

/* --- Calibration ------------------------------------------------------- */

/* Calibrates the requested methods ("ac,doc,atc,fid,ebm,laneperf" or a
 * subset) on the corpus's source_val mini-datasets and writes fingerprinted
 * artifact files under out_dir. embedder: "builtin" or "precomputed".
 * Returns LP_ERR_PARTIAL when some methods failed; report_json_out (optional)
 * receives a per-method summary either way. */
lp_status lp_calibrate(const lp_manifest* m, const lp_corpus* c,
                       const char* methods_csv, const char* embedder,
                       uint64_t seed, const char* out_dir,
                       char** report_json_out);

/* Loads previously written artifacts; refuses fingerprint mismatches. */
lp_status lp_bundle_open(const char* dir, const lp_manifest* m,
                         const char* methods_csv, lp_bundle** out);
void lp_bundle_close(lp_bundle* b);

/* --- Estimation and benchmarking --------------------------------------- */

lp_status lp_estimate(const lp_manifest* m, const lp_corpus* c,
                      const lp_bundle* b, const char* method, const char* role,
                      int index, const char* embedder, double* out);

/* Scores every requested method on the labeled target mini-datasets.
 * csv_out and table_out (either may be NULL) receive the report.
 * Returns LP_ERR_PARTIAL when some methods could not run. */
lp_status lp_benchmark(const lp_manifest* m, const lp_corpus* c,
                       const lp_bundle* b, const char* methods_csv,
                       const char* embedder, char** csv_out, char** table_out);

/* --- Synthetic corpus --------------------------------------------------- */

/* config_json: the generator configuration document; see the project README.
 * Writes manifest.json plus record files under out_dir. */
lp_status lp_synth_generate(const char* config_json, const char* out_dir);

/* Default generator configuration for the given seed, as a JSON document. */
lp_status lp_synth_default_config(uint64_t seed, char** config_json_out);

/* --- Self-check --------------------------------------------------------- */

/* Compares analytic network gradients against central finite differences.
 * corrupt != 0 deliberately breaks one gradient entry (negative control). */
lp_status lp_gradcheck(uint64_t seed, int trials, int corrupt,
                       double* max_rel_error, int* pass);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LANEPERF_LANEPERF_H */
