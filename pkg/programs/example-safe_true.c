// Cyclic state machine: x1 is incremented in state 1, x2 in state 2,
// and the states rotate 1 -> 2 -> 3 -> 4 -> 1.  Each time the machine
// is back in state 1 the two counters agree again, so the assertion
// (checked at the top of every iteration, vacuous outside state 1)
// holds on every run.  The loop may run arbitrarily long.
int s;
int x1;
int x2;
int cont;

s = 1;
x1 = 0;
x2 = 0;
cont = nondet();
while (cont != 0) {
  assert(!(s == 1) || x1 == x2);
  if (s == 1) {
    x1 = x1 + 1;
  } else {
    if (s == 2) {
      x2 = x2 + 1;
    }
  }
  s = s + 1;
  if (s == 5) {
    s = 1;
  }
  cont = nondet();
}
