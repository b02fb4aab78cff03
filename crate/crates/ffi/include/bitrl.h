#ifndef BITRL_H
#define BITRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Matrix-vector kernel selector.
 */
typedef enum BitrlKernel {
  /*
   Scalar decode and accumulate.
   */
  BITRL_KERNEL_SCALAR = 0,
  /*
   Lookup tables over groups of four activations.
   */
  BITRL_KERNEL_LUT = 1,
} BitrlKernel;

typedef enum BitrlStatus {
  BITRL_STATUS_OK = 0,
  BITRL_STATUS_NULL_POINTER = 1,
  BITRL_STATUS_INVALID_ARGUMENT = 2,
  BITRL_STATUS_DIMENSION_MISMATCH = 3,
  BITRL_STATUS_IO = 4,
  BITRL_STATUS_FORMAT = 5,
  BITRL_STATUS_PARSE_FAILED = 6,
  BITRL_STATUS_BUFFER_TOO_SMALL = 7,
  BITRL_STATUS_PANIC = 99,
} BitrlStatus;

/*
 Q-network restored from a checkpoint.
 */
typedef struct BitrlAgent BitrlAgent;

/*
 Ternary weight matrix with its absmean scale.
 */
typedef struct BitrlTernaryMatrix BitrlTernaryMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call into this library on the same thread.
 */
const char *bitrl_last_error_message(void);

/*
 Library version as a static string.
 */
const char *bitrl_version(void);

/*
 Quantizes a row-major `rows × cols` matrix with the absmean rule.
 */
enum BitrlStatus bitrl_ternary_quantize(const double *weights,
                                        size_t rows,
                                        size_t cols,
                                        struct BitrlTernaryMatrix **out);

/*
 Builds a matrix from row-major trits in `{-1, 0, 1}` and a positive scale.
 */
enum BitrlStatus bitrl_ternary_from_trits(const int8_t *trits,
                                          size_t rows,
                                          size_t cols,
                                          double scale,
                                          struct BitrlTernaryMatrix **out);

size_t bitrl_ternary_rows(const struct BitrlTernaryMatrix *m);

size_t bitrl_ternary_cols(const struct BitrlTernaryMatrix *m);

/*
 Absmean scale, or 0 for a null handle.
 */
double bitrl_ternary_scale(const struct BitrlTernaryMatrix *m);

/*
 Copies the unpacked trits (row-major, `rows * cols` values) into `out`.
 */
enum BitrlStatus bitrl_ternary_trits(const struct BitrlTernaryMatrix *m,
                                     int8_t *out,
                                     size_t out_len);

/*
 `out = W · x` with `x` quantized to int8 (absmax) first. `kernel` is a
 [`BitrlKernel`] value; `x_len` must equal the column count and `out_len`
 be at least the row count.
 */
enum BitrlStatus bitrl_ternary_matvec(const struct BitrlTernaryMatrix *m,
                                      uint32_t kernel,
                                      const double *x,
                                      size_t x_len,
                                      double *out,
                                      size_t out_len);

void bitrl_ternary_free(struct BitrlTernaryMatrix *m);

/*
 Loads a checkpoint written by `bitrl train` or the gateway.
 */
enum BitrlStatus bitrl_agent_load(const char *path, struct BitrlAgent **out);

size_t bitrl_agent_state_dim(const struct BitrlAgent *a);

size_t bitrl_agent_num_actions(const struct BitrlAgent *a);

/*
 Q-values of every action for one encoded state.
 */
enum BitrlStatus bitrl_agent_q_values(const struct BitrlAgent *a,
                                      const double *state,
                                      size_t state_len,
                                      double *out,
                                      size_t out_len);

/*
 Greedy action index (lowest index among ties) for one encoded state.
 */
enum BitrlStatus bitrl_agent_act(const struct BitrlAgent *a,
                                 const double *state,
                                 size_t state_len,
                                 size_t *action);

void bitrl_agent_free(struct BitrlAgent *a);

/*
 Parses `text` against a home description (JSON text, or null for the
 bundled four-zone home). On success `*out_json` receives
 `{"intent": …, "settings": […]}` for the home's initial state. On
 [`BitrlStatus::ParseFailed`] it receives the structured parse error
 instead. Release the string with [`bitrl_string_free`].
 */
enum BitrlStatus bitrl_parse_command(const char *home_json, const char *text_in, char **out_json);

void bitrl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BITRL_H */
