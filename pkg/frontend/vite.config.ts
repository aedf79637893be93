import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  server: {
    // Dev-only convenience; production serves the built assets from the
    // gateway process itself, so no proxy is involved there.
    proxy: {
      "/api": "http://127.0.0.1:8420",
    },
  },
  test: {
    environment: "jsdom",
    include: ["test/**/*.test.ts"],
  },
});
