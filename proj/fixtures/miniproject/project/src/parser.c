#include <string.h>

#include "rec.h"

int validate_magic(uint32_t magic) { return magic == REC_MAGIC ? 0 : -1; }

int parse_header(struct buffer *b, struct header *h) {
  if (buf_read_u32(b, &h->magic) != 0 || validate_magic(h->magic) != 0)
    return -1;
  if (buf_read_u16(b, &h->count) != 0 || buf_read_u16(b, &h->flags) != 0)
    return -1;
  return 0;
}

int decode_field(struct buffer *b, struct record *r) {
  uint8_t len;
  if (buf_read_u16(b, &r->kind) != 0 || buf_read_u8(b, &len) != 0)
    return -1;
  r->len = (uint16_t)clamp_size(len, 0, REC_FIELD_LEN);
  memset(r->field, 0, sizeof r->field);
  for (uint16_t i = 0; i < r->len; i++)
    if (buf_read_u8(b, &r->field[i]) != 0)
      return -1;
  if (len > r->len && buf_skip(b, len - r->len) != 0)
    return -1;
  r->crc = checksum_record(r);
  return 0;
}

int copy_record(struct table *t, size_t index, const struct record *r) {
  struct record *slot = table_slot(t, index);
  memcpy(slot, r, sizeof *slot);
  if (index + 1 > t->used)
    t->used = index + 1;
  return 0;
}

int read_records(struct buffer *b, struct table *t, size_t count) {
  struct record r;
  for (size_t i = 0; i < count; i++) {
    if (buf_remaining(b) == 0 || decode_field(b, &r) != 0)
      return -1;
    copy_record(t, i, &r);
  }
  return 0;
}

struct table *parse_buffer(const uint8_t *data, size_t size) {
  struct buffer b;
  struct header h;
  struct table *t;

  buf_init(&b, data, size);
  if (parse_header(&b, &h) != 0) {
    log_msg("invalid header");
    return NULL;
  }
  t = alloc_table(clamp_size(h.count, 1, REC_MAX_RECORDS));
  if (read_records(&b, t, h.count) != 0) {
    log_msg("truncated record");
    table_free(t);
    return NULL;
  }
  return t;
}
