#ifndef DYADMNAR_H
#define DYADMNAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum DyadmnarStatus {
  DYADMNAR_STATUS_OK = 0,
  DYADMNAR_STATUS_NULL_POINTER = 1,
  DYADMNAR_STATUS_INVALID_ARGUMENT = 2,
  DYADMNAR_STATUS_IO = 3,
  DYADMNAR_STATUS_PANEL = 4,
  DYADMNAR_STATUS_CONFIG = 5,
  DYADMNAR_STATUS_SAMPLER = 6,
  DYADMNAR_STATUS_PANIC = 7,
} DyadmnarStatus;

typedef enum DyadmnarVariant {
  DYADMNAR_VARIANT_A = 0,
  DYADMNAR_VARIANT_B = 1,
} DyadmnarVariant;

/*
 Opaque handle to a finished chain.
 */
typedef struct DyadmnarChain DyadmnarChain;

/*
 Opaque panel handle.
 */
typedef struct DyadmnarPanel DyadmnarPanel;

/*
 Posterior summary of one parameter.
 */
typedef struct DyadmnarSummary {
  double mean;
  double sd;
  double q025;
  double q975;
  double ess;
  double mcse;
} DyadmnarSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread, or NULL if none.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *dyadmnar_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *dyadmnar_version(void);

/*
 Reads a long-format panel CSV (`dyad_id,member,time,y[,covariates...]`).

 # Safety
 `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DyadmnarStatus dyadmnar_panel_read_csv(const char *path, struct DyadmnarPanel **out);

/*
 Generates one replicate of a built-in simulation design.

 # Safety
 `out` must be a writable pointer.
 */
enum DyadmnarStatus dyadmnar_panel_simulate(enum DyadmnarVariant variant,
                                            size_t n_dyads,
                                            uint64_t seed,
                                            uint64_t replicate,
                                            struct DyadmnarPanel **out);

/*
 Number of dyads, or 0 for a NULL handle.

 # Safety
 `panel` must be NULL or a live handle.
 */
size_t dyadmnar_panel_n_dyads(const struct DyadmnarPanel *panel);

/*
 Number of measurement waves, or 0 for a NULL handle.

 # Safety
 `panel` must be NULL or a live handle.
 */
size_t dyadmnar_panel_n_times(const struct DyadmnarPanel *panel);

/*
 # Safety
 `panel` must be NULL or a handle not yet freed.
 */
void dyadmnar_panel_free(struct DyadmnarPanel *panel);

/*
 Fits the selection model. `config_json` may be NULL for defaults; otherwise
 it uses the same schema as the command-line `--config` file.

 # Safety
 `panel` must be a live handle, `config_json` NULL or NUL-terminated, and
 `out` a writable pointer.
 */
enum DyadmnarStatus dyadmnar_fit(const struct DyadmnarPanel *panel,
                                 const char *config_json,
                                 struct DyadmnarChain **out);

/*
 # Safety
 `chain` must be NULL or a live handle.
 */
size_t dyadmnar_chain_n_params(const struct DyadmnarChain *chain);

/*
 Number of retained draws.

 # Safety
 `chain` must be NULL or a live handle.
 */
size_t dyadmnar_chain_n_draws(const struct DyadmnarChain *chain);

/*
 Name of parameter `index`, owned by the chain. NULL when out of range.

 # Safety
 `chain` must be NULL or a live handle.
 */
const char *dyadmnar_chain_param_name(const struct DyadmnarChain *chain, size_t index);

/*
 # Safety
 `chain` must be a live handle and `out` writable.
 */
enum DyadmnarStatus dyadmnar_chain_summary(const struct DyadmnarChain *chain,
                                           size_t index,
                                           struct DyadmnarSummary *out);

/*
 Copies the retained draws of parameter `index` into `buf`, which must hold
 at least `dyadmnar_chain_n_draws(chain)` values.

 # Safety
 `buf` must point to `len` writable doubles.
 */
enum DyadmnarStatus dyadmnar_chain_draws(const struct DyadmnarChain *chain,
                                         size_t index,
                                         double *buf,
                                         size_t len);

/*
 Summary JSON for the whole chain. Release with [`dyadmnar_string_free`].

 # Safety
 `chain` must be a live handle and `out` writable.
 */
enum DyadmnarStatus dyadmnar_chain_summary_json(const struct DyadmnarChain *chain, char **out);

/*
 # Safety
 `chain` must be NULL or a handle not yet freed.
 */
void dyadmnar_chain_free(struct DyadmnarChain *chain);

/*
 # Safety
 `s` must be NULL or a string returned by this library and not yet freed.
 */
void dyadmnar_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYADMNAR_H */
