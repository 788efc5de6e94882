export * from "./api.js";
export * from "./box.js";
export * from "./compare.js";
export * from "./session.js";
export { App } from "./app.js";
