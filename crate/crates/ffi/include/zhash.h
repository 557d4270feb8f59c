/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ZHASH_H
#define ZHASH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ZhStatus {
  ZH_STATUS_OK = 0,
  ZH_STATUS_NULL_POINTER = 1,
  ZH_STATUS_INVALID_PARAMETER = 2,
  // Key outside the admissible universe `[0, 2^61 - 1)`.
  ZH_STATUS_DOMAIN = 3,
  ZH_STATUS_INVALID_INPUT = 4,
  ZH_STATUS_UNSUPPORTED = 5,
  ZH_STATUS_CONSTRUCTION_FAILED = 6,
  ZH_STATUS_DECODE = 7,
  ZH_STATUS_IO = 8,
  // The output buffer is too small; the required size was stored.
  ZH_STATUS_BUFFER_TOO_SMALL = 9,
  ZH_STATUS_PANIC = 10,
} ZhStatus;

// Result of [`zh_cuckoo_insert`].
typedef enum ZhInsert {
  ZH_INSERT_PLACED = 0,
  ZH_INSERT_PLACED_VIA_STASH = 1,
  // Stash full; the table is unchanged and must be rebuilt.
  ZH_INSERT_REHASH_NEEDED = 2,
} ZhInsert;

// Cuckoo hash table with stash (two tables).
typedef struct ZhCuckoo ZhCuckoo;

// A drawn member of the hash class Z.
typedef struct ZhFamily ZhFamily;

// Perfect hash function into `[2m]`.
typedef struct ZhMphf ZhMphf;

// Uniform hash simulation over `w`-bit words.
typedef struct ZhUniform ZhUniform;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, NUL-terminated description of a status code.
const char *zh_status_string(enum ZhStatus status);

// Message of the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *zh_last_error(void);

// Library version, NUL-terminated.
const char *zh_version(void);

// Draws a member of Z with `c` g-functions, `d` hash functions of
// independence `kappa` (even), g-range `ell` and range `m`.
//
// # Safety
// `out` must be valid for a write.
enum ZhStatus zh_family_draw(uint64_t seed,
                             size_t c,
                             size_t d,
                             size_t kappa,
                             uint64_t ell,
                             uint64_t m,
                             struct ZhFamily **out);

// # Safety
// `fam` must come from this library and not be freed twice (null is a no-op).
void zh_family_free(struct ZhFamily *fam);

// Number of hash functions `d`, or 0 for a null handle.
//
// # Safety
// `fam` must be a live handle or null.
size_t zh_family_arity(const struct ZhFamily *fam);

// Writes `h_1(key), ..., h_d(key)` to `out[0..d]`; `out_len` must be at
// least `d`.
//
// # Safety
// `fam` must be a live handle; `out` must be valid for `out_len` writes.
enum ZhStatus zh_family_eval(const struct ZhFamily *fam,
                             uint64_t key,
                             uint64_t *out,
                             size_t out_len);

// Serializes the family. With a too small (or null) buffer, returns
// `ZH_STATUS_BUFFER_TOO_SMALL` and stores the needed size in `*len`.
//
// # Safety
// `fam` must be a live handle; `buf` valid for `cap` bytes; `len` writable.
enum ZhStatus zh_family_to_bytes(const struct ZhFamily *fam, uint8_t *buf, size_t cap, size_t *len);

// # Safety
// `buf` must be valid for `len` bytes; `out` writable.
enum ZhStatus zh_family_from_bytes(const uint8_t *buf, size_t len, struct ZhFamily **out);

// Cuckoo table for `n` keys: two tables of `ceil((1 + epsilon) n)` cells,
// `ell = ceil(n^delta)`, `c` g-functions, a stash of `stash` keys.
//
// # Safety
// `out` must be writable.
enum ZhStatus zh_cuckoo_new(uint64_t seed,
                            size_t n,
                            double epsilon,
                            double delta,
                            size_t c,
                            size_t stash,
                            struct ZhCuckoo **out);

// # Safety
// `table` must come from this library and not be freed twice (null is a no-op).
void zh_cuckoo_free(struct ZhCuckoo *table);

// # Safety
// `table` must be a live handle; `outcome` writable.
enum ZhStatus zh_cuckoo_insert(struct ZhCuckoo *table, uint64_t key, enum ZhInsert *outcome);

// # Safety
// `table` must be a live handle; `found` writable.
enum ZhStatus zh_cuckoo_contains(const struct ZhCuckoo *table, uint64_t key, bool *found);

// # Safety
// `table` must be a live handle; `removed` writable.
enum ZhStatus zh_cuckoo_remove(struct ZhCuckoo *table, uint64_t key, bool *removed);

// Stored keys, or 0 for a null handle.
//
// # Safety
// `table` must be a live handle or null.
size_t zh_cuckoo_len(const struct ZhCuckoo *table);

// Keys currently in the stash, or 0 for a null handle.
//
// # Safety
// `table` must be a live handle or null.
size_t zh_cuckoo_stash_len(const struct ZhCuckoo *table);

// Builds a perfect hash function on `keys[0..n]` (distinct). `attempts`
// may be null.
//
// # Safety
// `keys` must be valid for `n` reads; `out` writable; `attempts` writable or null.
enum ZhStatus zh_mphf_build(uint64_t seed,
                            const uint64_t *keys,
                            size_t n,
                            double epsilon,
                            double delta,
                            size_t c,
                            struct ZhMphf **out,
                            uint32_t *attempts);

// # Safety
// `ph` must come from this library and not be freed twice (null is a no-op).
void zh_mphf_free(struct ZhMphf *ph);

// # Safety
// `ph` must be a live handle; `value` writable.
enum ZhStatus zh_mphf_eval(const struct ZhMphf *ph, uint64_t key, uint64_t *value);

// Output range `2m`, or 0 for a null handle.
//
// # Safety
// `ph` must be a live handle or null.
uint64_t zh_mphf_range(const struct ZhMphf *ph);

// Serializes the function; see [`zh_family_to_bytes`] for the buffer protocol.
//
// # Safety
// `ph` must be a live handle; `buf` valid for `cap` bytes; `len` writable.
enum ZhStatus zh_mphf_to_bytes(const struct ZhMphf *ph, uint8_t *buf, size_t cap, size_t *len);

// # Safety
// `buf` must be valid for `len` bytes; `out` writable.
enum ZhStatus zh_mphf_from_bytes(const uint8_t *buf, size_t len, struct ZhMphf **out);

// Acyclicity probability `sqrt(1 - (1/(1+eps))^2)` and its lower bound
// `1 + ln(1 - (1/(1+eps))^2) / 2`.
//
// # Safety
// `exact` and `lower` must be writable.
enum ZhStatus zh_acyclic_prob_bounds(double epsilon, double *exact, double *lower);

// Uniform hash simulation for `n` keys over `w`-bit words (1..=64).
//
// # Safety
// `out` must be writable.
enum ZhStatus zh_uniform_build(uint64_t seed,
                               uint64_t n,
                               double epsilon,
                               double delta,
                               size_t c,
                               uint32_t w,
                               struct ZhUniform **out);

// # Safety
// `ds` must come from this library and not be freed twice (null is a no-op).
void zh_uniform_free(struct ZhUniform *ds);

// # Safety
// `ds` must be a live handle; `value` writable.
enum ZhStatus zh_uniform_eval(const struct ZhUniform *ds, uint64_t key, uint64_t *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZHASH_H */
