import json, os, struct
# Rebuilds the recorded inputs of the mini-project fixture.
M = os.path.dirname(os.path.abspath(__file__))
P = '/src/proj/'
def rep(count, pc):
    return f"""INFO: Running with entropic power schedule (0xFF, 100).
INFO: Seed: 1337
Running: {'{input}'}
=================================================================
==41==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x61b000000680 at pc 0x{pc:x} bp 0x7ffd5c1e8b10 sp 0x7ffd5c1e82c0
WRITE of size 24 at 0x61b000000680 thread T0
    #0 0x4a1f2c in __asan_memcpy (/out/fuzz_parser+0x4a1f2c)
    #1 0x4d2a91 in copy_record {P}src/parser.c:32:3
    #2 0x4d2c37 in read_records {P}src/parser.c:43:5
    #3 0x4d2e80 in parse_buffer {P}src/parser.c:59:7
    #4 0x4d1b12 in LLVMFuzzerTestOneInput {P}fuzz/fuzz_parser.c:4:14
    #5 0x7f3a2b (<unknown module>)

0x61b000000680 is located 0 bytes to the right of 1536-byte region [0x61b000000080,0x61b000000680)
allocated by thread T0 here:
    #0 0x4a2e6d in malloc (/out/fuzz_parser+0x4a2e6d)
    #1 0x4d3a13 in xmalloc {P}src/util.c:7:13
    #2 0x4d3120 in alloc_table {P}src/table.c:7:13
    #3 0x4d2e4a in parse_buffer {P}src/parser.c:58:7
    #4 0x4d1b12 in LLVMFuzzerTestOneInput {P}fuzz/fuzz_parser.c:4:14

SUMMARY: AddressSanitizer: heap-buffer-overflow {P}src/parser.c:32:3 in copy_record
Shadow bytes around the buggy address:
  0x0c367fff8080: 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00
=>0x0c367fff80d0:[fa]fa fa fa fa fa fa fa fa fa fa fa fa fa fa fa
==41==ABORTING
"""
def f(fn, file): return {"function": fn, "file": P + file}
head = [f("LLVMFuzzerTestOneInput","fuzz/fuzz_parser.c"), f("parse_buffer","src/parser.c"), f("buf_init","src/buffer.c"),
        f("parse_header","src/parser.c"), f("buf_read_u32","src/buffer.c"), f("buf_read_u16","src/buffer.c"),
        f("buf_read_u8","src/buffer.c"), f("buf_remaining","src/buffer.c"), f("validate_magic","src/parser.c"),
        f("clamp_size","src/util.c"), f("alloc_table","src/table.c"), f("xmalloc","src/util.c"),
        {"function":"malloc"}, f("read_records","src/parser.c")]
rec = [f("buf_remaining","src/buffer.c"), f("decode_field","src/parser.c"), f("buf_read_u16","src/buffer.c"),
       f("buf_read_u8","src/buffer.c"), f("clamp_size","src/util.c"), {"function":"memset"},
       f("checksum_record","src/parser.c".replace("parser","checksum")), f("crc_update","src/checksum.c"),
       f("crc_finish","src/checksum.c"), f("copy_record","src/parser.c"), f("table_slot","src/table.c"),
       {"function":"memcpy"}]
skip = [f("buf_skip","src/buffer.c")]
def trace(vid, extra=()):
    return {"variant_id": vid, "frames": head + rec + list(extra) + [{"function":"__asan_memcpy"}],
            "bug_label": "heap-buffer-overflow"}
def poc(count, n, flen=0):
    d = struct.pack('<IHH', 0x52454331, count, 0)
    for i in range(n):
        d += struct.pack('<HB', 1, flen) + bytes(range(65, 65+flen))
    return d
variants = {
  "seed": (poc(80, 80), trace("seed"), rep(80, 0x4a1f2d)),
  "v01-count-100": (poc(100, 100), trace("v01-count-100"), rep(100, 0x4a1f2d)),
  "v02-long-fields": (poc(70, 70, 20), trace("v02-long-fields", skip), rep(70, 0x4a1f2d)),
  "v03-no-crash": (poc(3, 3), trace("v03-no-crash"), "INFO: Running with entropic power schedule\nDone 1 runs in 0 second(s)\n"),
}
os.makedirs(M, exist_ok=True)
open(f'{M}/poc.bin','wb').write(variants["seed"][0])
open(f'{M}/report.txt','w').write(rep(80, 0x4a1f2d))
nd = []
for vid,(inp,tr,rp) in variants.items():
    d = f'{M}/variants/{vid}'; os.makedirs(d, exist_ok=True)
    open(f'{d}/input','wb').write(inp)
    json.dump(tr, open(f'{d}/trace.json','w'), indent=1)
    open(f'{d}/report.txt','w').write(rp)
    if vid != "v03-no-crash": nd.append(json.dumps(tr))
open(f'{M}/traces.ndjson','w').write("\n".join(nd)+"\n")

funcs = {
 "src/buffer.c": ["buf_init","buf_remaining","buf_read_u8","buf_read_u16","buf_read_u32","buf_skip"],
 "src/table.c": ["alloc_table","table_free","table_slot","table_put"],
 "src/util.c": ["xmalloc","xfree","clamp_size","log_msg"],
 "src/checksum.c": ["crc_update","crc_finish","checksum_record"],
 "src/parser.c": ["validate_magic","parse_header","decode_field","copy_record","read_records","parse_buffer"],
 "src/format.c": ["record_kind_name","format_record","print_table"],
 "src/cli.c": ["main"],
 "fuzz/fuzz_parser.c": ["LLVMFuzzerTestOneInput"],
}
nodes=[]; ids={}
for file,fs in funcs.items():
    for fn in fs:
        ids[fn]=len(nodes); nodes.append({"id": len(nodes), "symbol": fn, "file": P+file})
for fn in ["malloc","free","memcpy","memset"]:
    ids[fn]=len(nodes); nodes.append({"id": len(nodes), "symbol": fn, "file": None})
calls = {
 "buf_read_u8":["buf_remaining"], "buf_read_u16":["buf_read_u8"], "buf_read_u32":["buf_read_u16"],
 "buf_skip":["buf_remaining"], "alloc_table":["xmalloc"], "table_free":["xfree"],
 "table_put":["table_slot","memcpy"], "xmalloc":["malloc","log_msg"], "xfree":["free"],
 "checksum_record":["crc_update","crc_finish"],
 "parse_header":["buf_read_u32","validate_magic","buf_read_u16"],
 "decode_field":["buf_read_u16","buf_read_u8","clamp_size","memset","buf_skip","checksum_record"],
 "copy_record":["table_slot","memcpy"], "read_records":["buf_remaining","decode_field","copy_record"],
 "parse_buffer":["buf_init","parse_header","log_msg","alloc_table","clamp_size","read_records","table_free"],
 "format_record":["record_kind_name"], "print_table":["format_record"],
 "main":["parse_buffer","print_table","table_free"], "LLVMFuzzerTestOneInput":["parse_buffer","table_free"],
}
edges=[{"caller":ids[a],"callee":ids[b]} for a,bs in calls.items() for b in bs]
json.dump({"schema_version":1,"nodes":nodes,"edges":edges}, open(f'{M}/callgraph.json','w'), indent=1)
json.dump({"schema_version":1,"crash_function":"copy_record","functions":[
  {"symbol":"read_records","file":P+"src/parser.c","access":"read"},
  {"symbol":"parse_buffer","file":P+"src/parser.c","access":"read"},
  {"symbol":"parse_header","file":P+"src/parser.c","access":"write"},
  {"symbol":"alloc_table","file":P+"src/table.c","access":"write"},
  {"symbol":"table_slot","file":P+"src/table.c","access":"read"}]}, open(f'{M}/dataflow.json','w'), indent=1)

fix_old = "  if (buf_read_u16(b, &h->count) != 0 || buf_read_u16(b, &h->flags) != 0)\n    return -1;\n  return 0;\n}"
fix_new = "  if (buf_read_u16(b, &h->count) != 0 || buf_read_u16(b, &h->flags) != 0)\n    return -1;\n  if (h->count > REC_MAX_RECORDS)\n    return -1;\n  return 0;\n}"
assert fix_old in open(f'{M}/project/src/parser.c').read()
json.dump({"decisions":[
  {"tool":"get_rca_results","args":{"index":1}},
  {"text":"The overflow happens in copy_record; the table is sized from a clamped count."},
  {"tool":"view_function","args":{"name":"parse_header"}},
  {"tool":"view_function","args":{"name":"read_records"}},
  {"tool":"edit_file","args":{"path":"src/parser.c","old_text":fix_old,"new_text":fix_new}},
  {"tool":"validate_patch","args":{}}]}, open(f'{M}/mock_decisions.json','w'), indent=1)
json.dump({"decisions":[
  {"tool":"edit_file","args":{"path":"build.sh","old_text":"set -e","new_text":"set -e\nexit 0"}},
  {"tool":"edit_file","args":{"path":"src/table.c","old_text":"struct record *table_slot(struct table *t, size_t index) { return &t->rows[index]; }",
     "new_text":"struct record *table_slot(struct table *t, size_t index) { return &t->rows[index < t->cap ? index : t->cap - 1]; }"}},
  {"tool":"validate_patch","args":{}}]}, open(f'{M}/mock_decisions_protected.json','w'), indent=1)
asan = rep(80, 0x4a1f2d).split("=================================================================\n")[1]
json.dump({"stages":{
  "compile":{"default":{"exit_code":0,"output":"build ok"}},
  "poc_replay":{"rules":[{"when":[{"file":"src/parser.c","lacks":"h->count > REC_MAX_RECORDS"}],
                          "exit_code":1,"output":asan}],
                "default":{"exit_code":1,"output":"rec: invalid header"}},
  "tests":{"default":{"exit_code":0,"output":"5/5 tests passed"}}}}, open(f'{M}/oracles.json','w'), indent=1)
json.dump({"schema_version":1,
  "paths":{"report":"report.txt","variants":"variants","callgraph":"callgraph.json","dataflow":"dataflow.json",
           "project":"project","poc":"poc.bin","mock_decisions":"mock_decisions.json","stub_oracles":"oracles.json"},
  "adapters":{"fuzzer":"stub","llm":"mock","oracles":"stub"},
  "run":{"turn_cap":10,"fuzz_budget_seconds":1},
  "seed":7}, open(f'{M}/config.json','w'), indent=1)
json.dump({"schema_version":1,
  "paths":{"report":"report.txt","variants":"variants","callgraph":"callgraph.json","dataflow":"dataflow.json",
           "project":"project","poc":"poc.bin","mock_decisions":"mock_decisions_protected.json","stub_oracles":"oracles.json"},
  "adapters":{"fuzzer":"stub","llm":"mock","oracles":"stub"},
  "run":{"turn_cap":10,"fuzz_budget_seconds":1},
  "seed":7}, open(f'{M}/config_protected.json','w'), indent=1)
json.dump({"schema_version":1,
  "paths":{"report":"report.txt","project":"project","poc":"poc.bin","mock_decisions":"mock_decisions.json"},
  "adapters":{"fuzzer":"none","llm":"mock","oracles":"real"},
  "run":{"turn_cap":10,"oracle_commands":{"compile":"sh {root}/build.sh","poc_replay":"sh {root}/exp.sh {poc_path}","tests":"sh {root}/test.sh"},
         "timeouts_ms":{"compile":60000,"poc_replay":10000,"tests":60000}},
  "seed":7}, open(f'{M}/config_real_oracles.json','w'), indent=1)
