#ifndef REC_H
#define REC_H

#include <stddef.h>
#include <stdint.h>

#define REC_MAGIC 0x52454331u
#define REC_MAX_RECORDS 64
#define REC_FIELD_LEN 16

struct buffer {
  const uint8_t *data;
  size_t size;
  size_t pos;
};

struct header {
  uint32_t magic;
  uint16_t count;
  uint16_t flags;
};

struct record {
  uint16_t kind;
  uint16_t len;
  uint8_t field[REC_FIELD_LEN];
  uint32_t crc;
};

struct table {
  struct record *rows;
  size_t cap;
  size_t used;
};

/* buffer.c */
void buf_init(struct buffer *b, const uint8_t *data, size_t size);
int buf_read_u8(struct buffer *b, uint8_t *out);
int buf_read_u16(struct buffer *b, uint16_t *out);
int buf_read_u32(struct buffer *b, uint32_t *out);
size_t buf_remaining(const struct buffer *b);
int buf_skip(struct buffer *b, size_t n);

/* table.c */
struct table *alloc_table(size_t cap);
void table_free(struct table *t);
struct record *table_slot(struct table *t, size_t index);
int table_put(struct table *t, const struct record *r);

/* util.c */
void *xmalloc(size_t n);
void xfree(void *p);
size_t clamp_size(size_t v, size_t lo, size_t hi);
void log_msg(const char *msg);

/* checksum.c */
uint32_t crc_update(uint32_t crc, const uint8_t *p, size_t n);
uint32_t crc_finish(uint32_t crc);
uint32_t checksum_record(const struct record *r);

/* parser.c */
int validate_magic(uint32_t magic);
int parse_header(struct buffer *b, struct header *h);
int decode_field(struct buffer *b, struct record *r);
int copy_record(struct table *t, size_t index, const struct record *r);
int read_records(struct buffer *b, struct table *t, size_t count);
struct table *parse_buffer(const uint8_t *data, size_t size);

/* format.c */
const char *record_kind_name(uint16_t kind);
int format_record(const struct record *r, char *out, size_t n);
void print_table(const struct table *t);

#endif
