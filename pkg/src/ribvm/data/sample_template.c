/* Minimal RVM host skeleton.  Specialize with the annotation processor. */

#include <stdlib.h>
#include <stdio.h> // @@(feature stdio)@@

// @@(replace "RIBN_RB" rb
#define RB RIBN_RB
// )@@
// @@(replace "RIBN_SIZE" compression/lzss/2b/ribn-size
#define RIBN_CODES RIBN_SIZE
// )@@

// @@(feature encoding/original
static const char *ribn = "RIBN"; // @@(replace "RIBN" (encode 92))@@
// )@@
// @@(feature encoding/optimal
// @@(replace "[0]" (encode-as-bytes 256 "{" "," "}")
static const unsigned char ribn[] = [0];
// )@@
// @@(replace "[0,1,2]" (list->host encoding/optimal/start "{" "," "}")
static const int range_start[] = [0,1,2];
// )@@
// )@@

// @@(feature compression/lzss/2b
// @@(replace "SIZE_BASE" compression/lzss/2b/sb
#define SB SIZE_BASE
// )@@
void lzss_expand(void);
// )@@

typedef long obj;
obj *stack, pc;

void init(void) {
  // @@(location init)@@
  stack = 0;
}

// @@(feature arity-check
int check_arity(int nparams, int nargs) { return nparams == nargs; }
// )@@

void prim(int no) {
  switch (no) {
    // @@(primitives (gen "case " index ":" body)
    // @@(primitive (##rib a b c)
      push3();
      break;
    // )@@
    // @@(primitive (##id x)
      break;
    // )@@
    // @@(primitive (##arg1 x y)
      pop();
      break;
    // )@@
    // @@(primitive (##arg2 x y)
      swap_pop();
      break;
    // )@@
    // @@(primitive (##close p)
      close_over();
      break;
    // )@@
    // @@(primitive (##rib? x)
      push_bool(is_rib(pop()));
      break;
    // )@@
    // @@(primitive (##field0 r)
      push(field(pop(), 0));
      break;
    // )@@
    // @@(primitive (##field1 r)
      push(field(pop(), 1));
      break;
    // )@@
    // @@(primitive (##field2 r)
      push(field(pop(), 2));
      break;
    // )@@
    // @@(primitive (##eqv? x y)
      push_bool(pop() == pop());
      break;
    // )@@
    // @@(primitive (##< x y)
      lt();
      break;
    // )@@
    // @@(primitive (##+ x y)
      add();
      break;
    // )@@
    // @@(primitive (##- x y)
      sub();
      break;
    // )@@
    // @@(primitive (##* x y)
      mul();
      break;
    // )@@
    // @@(primitive (##quotient x y)
      quo();
      break;
    // )@@
    // @@(primitive (getchar) (use stdio)
      push_num(getchar());
      break;
    // )@@
    // @@(primitive (putchar c) (use stdio)
      putchar(top_num());
      fflush(stdout);
      break;
    // )@@
    // @@(primitive (##exit n)
      exit(top_num());
    // )@@
    // )@@
  }
}

int main(void) {
  init();
  run();
  return 0;
}
