#ifndef OSTROGRAD_H
#define OSTROGRAD_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define OSTROGRAD_API __declspec(dllexport)
#else
#define OSTROGRAD_API __attribute__((visibility("default")))
#endif

typedef enum ostrograd_status {
  OSTROGRAD_OK = 0,
  OSTROGRAD_ERR_PARSE = 1,     /* malformed model text */
  OSTROGRAD_ERR_SEMANTIC = 2,  /* model violates a rule (order, unknown name) */
  OSTROGRAD_ERR_ARGUMENT = 3,  /* bad command, option or null pointer */
  OSTROGRAD_ERR_NUMERIC = 4,   /* evaluation or convergence failure */
  OSTROGRAD_ERR_SINGULAR = 5,  /* needs a regular Lagrangian */
  OSTROGRAD_ERR_INTERNAL = 6
} ostrograd_status;

typedef struct ostrograd_model ostrograd_model;

OSTROGRAD_API ostrograd_status ostrograd_model_parse(const char* text, ostrograd_model** out);
OSTROGRAD_API ostrograd_status ostrograd_model_load(const char* path, ostrograd_model** out);
OSTROGRAD_API void ostrograd_model_free(ostrograd_model* model);

/* Canonical model text; release with ostrograd_string_free. */
OSTROGRAD_API ostrograd_status ostrograd_model_print(const ostrograd_model* model, char** out);

/* Runs analyze, el, cartan1, cartan2, legendre, hamiltonian, constraints,
   simulate or check. options_json may be NULL; keys: seed, type1,
   max_generations, infix, side, h, t0, t1, init. On success *out_json holds
   the report; release with ostrograd_string_free. */
OSTROGRAD_API ostrograd_status ostrograd_run(const ostrograd_model* model, const char* command,
                                             const char* options_json, char** out_json);

OSTROGRAD_API void ostrograd_string_free(char* s);

/* Message of the last failure on the calling thread ("" if none). */
OSTROGRAD_API const char* ostrograd_last_error(void);
OSTROGRAD_API const char* ostrograd_status_name(ostrograd_status status);
OSTROGRAD_API const char* ostrograd_version(void);

#ifdef __cplusplus
}
#endif

#endif
