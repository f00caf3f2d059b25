#!/usr/bin/env node
// SMT-LIB2 REPL over the z3 WebAssembly build, for hosts without a native
// z3 binary.  Reads commands from stdin, buffers until the parentheses
// balance, evaluates each complete command against one persistent context
// (so push/pop and declarations behave exactly like `z3 -in -smt2`), and
// writes whatever output z3 produces.

"use strict";

function loadZ3() {
  const candidates = ["z3-solver", "/usr/lib/node_modules/z3-solver"];
  for (const c of candidates) {
    try {
      return require(c);
    } catch (e) {
      if (e.code !== "MODULE_NOT_FOUND") throw e;
    }
  }
  throw new Error("z3-solver package not found");
}

(async () => {
  const { init } = loadZ3();
  const { em, Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);

  // The stock Z3.eval_smtlib2_string marshals its string argument onto
  // the wasm stack, but the call itself only queues work for a pthread
  // worker and returns at once; the stack slot is recycled while the
  // worker is still reading it, which garbles commands under load.
  // Copying the text into the heap and freeing it after the promise
  // settles avoids that.
  const rawEval = em && em._malloc && em._free && em.async_call &&
    em._async_Z3_eval_smtlib2_string;
  async function evalCommand(cmd) {
    if (!rawEval) return Z3.eval_smtlib2_string(ctx, cmd);
    const bytes = Buffer.from(cmd, "utf8");
    const ptr = em._malloc(bytes.length + 1);
    em.HEAPU8.set(bytes, ptr);
    em.HEAPU8[ptr + bytes.length] = 0;
    try {
      return await em.async_call(em._async_Z3_eval_smtlib2_string, ctx, ptr);
    } finally {
      em._free(ptr);
    }
  }

  let buf = "";
  let depth = 0;
  let scanned = 0; // prefix of buf already counted into depth
  let inString = false;
  let inQuoted = false;
  let inComment = false;
  let queue = Promise.resolve();

  function extractCommands() {
    const out = [];
    for (; scanned < buf.length; scanned++) {
      const ch = buf[scanned];
      if (inComment) {
        if (ch === "\n") inComment = false;
      } else if (inString) {
        if (ch === '"') inString = false;
      } else if (inQuoted) {
        if (ch === "|") inQuoted = false;
      } else if (ch === ";") {
        inComment = true;
      } else if (ch === '"') {
        inString = true;
      } else if (ch === "|") {
        inQuoted = true;
      } else if (ch === "(") {
        depth++;
      } else if (ch === ")") {
        depth--;
        if (depth === 0) {
          out.push(buf.slice(0, scanned + 1));
          buf = buf.slice(scanned + 1);
          scanned = -1; // loop increment brings it back to 0
        }
      }
    }
    return out;
  }

  function runCommand(cmd) {
    queue = queue.then(async () => {
      if (/^\s*\(\s*exit\s*\)\s*$/.test(cmd)) {
        process.exit(0);
      }
      let result;
      try {
        result = await evalCommand(cmd);
      } catch (e) {
        result = '(error "' + String(e.message || e).replace(/"/g, "'") + '")\n';
      }
      if (result && result.length) process.stdout.write(result);
    });
  }

  process.stdin.setEncoding("utf8");
  process.stdin.on("data", (chunk) => {
    buf += chunk;
    for (const cmd of extractCommands()) runCommand(cmd);
  });
  process.stdin.on("end", () => {
    queue.then(() => process.exit(0));
  });
})().catch((e) => {
  process.stderr.write("solver_repl: " + String(e && e.stack ? e.stack : e) + "\n");
  process.exit(1);
});
