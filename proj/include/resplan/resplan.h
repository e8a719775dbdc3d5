/* C interface to the resplan library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every function returning rp_status records a message for the calling
 * thread on failure; read it with rp_last_error(). Strings returned through
 * `char**` are owned by the caller and released with rp_string_free(). */
#ifndef RESPLAN_RESPLAN_H
#define RESPLAN_RESPLAN_H

#include <stddef.h>

#if defined(RESPLAN_BUILDING_LIBRARY)
#define RP_API __attribute__((visibility("default")))
#else
#define RP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rp_status {
  RP_OK = 0,
  RP_ERR_PARSE = 1,        /* malformed text; line/column available */
  RP_ERR_VALIDATION = 2,   /* unknown entity, bad value; line/column when from text */
  RP_ERR_UNSOLVABLE = 3,   /* mission goals unreachable within the horizon */
  RP_ERR_BUDGET = 4,       /* search budget spent before any plan was found */
  RP_ERR_BOUND = 5,        /* automaton, outcome tree or expectimax too large */
  RP_ERR_IO = 6,
  RP_ERR_ARGUMENT = 7,     /* null handle or out-of-range option */
  RP_ERR_PRECONDITION = 8, /* plan step not applicable, zero baseline return */
  RP_ERR_INTERNAL = 9
} rp_status;

typedef struct rp_scenario rp_scenario;
typedef struct rp_prefs rp_prefs;
typedef struct rp_plan rp_plan;
typedef struct rp_comparison rp_comparison;

typedef struct rp_plan_options {
  int horizon;                   /* 0: the scenario's horizon */
  unsigned long long node_budget; /* 0: library default */
} rp_plan_options;

/* Version string of the structured documents this library produces. */
RP_API const char* rp_format_version(void);

RP_API const char* rp_last_error(void);
/* Source location of the last parse/validation error, 0 when unknown. */
RP_API int rp_last_error_line(void);
RP_API int rp_last_error_column(void);
RP_API void rp_string_free(char* s);

/* Scenarios */
RP_API rp_status rp_scenario_names_json(char** out);
RP_API rp_status rp_scenario_bundled(const char* name, rp_scenario** out);
RP_API rp_status rp_scenario_load(const char* path, rp_scenario** out);
RP_API rp_status rp_scenario_parse(const char* text, rp_scenario** out);
RP_API rp_status rp_scenario_render(const rp_scenario* s, char** out);
RP_API rp_status rp_scenario_json(const rp_scenario* s, char** out);
RP_API void rp_scenario_free(rp_scenario* s);

/* Constraint sets, parsed against a scenario's world. */
RP_API rp_status rp_prefs_parse(const rp_scenario* s, const char* text, rp_prefs** out);
RP_API rp_status rp_prefs_load(const rp_scenario* s, const char* path, rp_prefs** out);
RP_API rp_status rp_prefs_reference(const rp_scenario* s, rp_prefs** out);
RP_API rp_status rp_prefs_render(const rp_prefs* p, char** out);
RP_API size_t rp_prefs_count(const rp_prefs* p);
RP_API void rp_prefs_free(rp_prefs* p);

/* Planning. rp_plan_with_constraints plans for the operator preferences plus
 * `constraints` (which may be NULL); rp_plan_baseline ignores every
 * preference. `options` may be NULL. */
RP_API rp_status rp_plan_baseline(const rp_scenario* s, const rp_plan_options* options, rp_plan** out);
RP_API rp_status rp_plan_with_constraints(const rp_scenario* s, const rp_prefs* constraints,
                                          const rp_plan_options* options, rp_plan** out);
RP_API rp_status rp_plan_parse(const rp_scenario* s, const char* text, rp_plan** out);
RP_API rp_status rp_plan_text(const rp_plan* p, char** out);
/* Plan document: steps, positions, explain report and expected return under
 * the scenario's assessment model (scored against operator preferences). */
RP_API rp_status rp_plan_json(const rp_plan* p, char** out);
RP_API double rp_plan_score(const rp_plan* p);
RP_API int rp_plan_length(const rp_plan* p);
RP_API void rp_plan_free(rp_plan* p);

/* Base / constrained / optimal comparison. Optimal values are cached per
 * scenario for the life of the process. `constraints` may be NULL. */
RP_API rp_status rp_compare(const rp_scenario* s, const rp_prefs* constraints, const rp_plan_options* options,
                            rp_comparison** out);
RP_API rp_status rp_comparison_json(const rp_comparison* c, char** out);
RP_API double rp_comparison_improvement(const rp_comparison* c);
RP_API double rp_comparison_optimality(const rp_comparison* c);
/* Table over `count` comparisons; `average` appends the "Ave." row. */
RP_API rp_status rp_comparison_table(const rp_comparison* const* rows, size_t count, int average, char** out);
RP_API void rp_comparison_free(rp_comparison* c);

#ifdef __cplusplus
}
#endif

#endif /* RESPLAN_RESPLAN_H */
