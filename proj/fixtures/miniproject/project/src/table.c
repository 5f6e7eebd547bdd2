#include <string.h>

#include "rec.h"

struct table *alloc_table(size_t cap) {
  struct table *t = xmalloc(sizeof *t);
  t->rows = xmalloc(cap * sizeof *t->rows);
  t->cap = cap;
  t->used = 0;
  return t;
}

void table_free(struct table *t) {
  if (!t)
    return;
  xfree(t->rows);
  xfree(t);
}

/* Callers are expected to stay below cap. */
struct record *table_slot(struct table *t, size_t index) { return &t->rows[index]; }

int table_put(struct table *t, const struct record *r) {
  if (t->used >= t->cap)
    return -1;
  memcpy(table_slot(t, t->used), r, sizeof *r);
  t->used++;
  return 0;
}
