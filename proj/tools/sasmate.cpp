// Command-line front end: one subcommand per tool plus the HTTP server and a
// terminal chat loop.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sasmate/sasmate.hpp"

namespace {

using namespace sasmate;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitBackend = 4;

std::string fmt(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidDataset, "cannot read file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidDataset, "cannot write file '" + path + "'");
  out << content;
}

std::pair<std::string, std::string> split_once(const std::string& item, char sep, const char* what) {
  const auto pos = item.find(sep);
  if (pos == std::string::npos || pos == 0)
    throw CLI::ValidationError(what, "expected name" + std::string(1, sep) + "value, got '" + item + "'");
  return {item.substr(0, pos), item.substr(pos + 1)};
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError(what, "not a number: '" + s + "'");
}

std::map<std::string, double> assignments(const std::vector<std::string>& items, const char* what) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    auto [k, v] = split_once(item, '=', what);
    out[k] = to_double(v, what);
  }
  return out;
}

std::map<std::string, std::pair<double, double>> bound_map(const std::vector<std::string>& items) {
  std::map<std::string, std::pair<double, double>> out;
  for (const auto& item : items) {
    auto [k, v] = split_once(item, '=', "--bound");
    auto [lo, hi] = split_once(v, ',', "--bound");
    out[k] = {to_double(lo, "--bound"), to_double(hi, "--bound")};
  }
  return out;
}

std::shared_ptr<DocStore> make_docs(const std::string& docs_dir) {
  auto corpus = model_docs();
  if (!docs_dir.empty())
    for (auto& d : load_user_docs(docs_dir)) corpus.push_back(std::move(d));
  return std::make_shared<DocStore>(std::move(corpus));
}

std::shared_ptr<agent::ChatBackend> make_backend(const std::string& kind, const std::string& scenario,
                                                 const std::shared_ptr<agent::SettingsStore>& settings) {
  if (kind == "scripted") {
    if (scenario.empty()) throw CLI::ValidationError("--scenario", "the scripted backend needs a scenario file");
    return agent::ScriptedBackend::from_file(scenario);
  }
  return std::make_shared<agent::OpenAiBackend>(settings);
}

// sld

struct SldArgs {
  std::string formula;
  double density = 0.0;
};

int run_sld(const SldArgs& a) {
  const SldResult r = sld_report(a.formula, a.density);
  const auto comp = parse_formula(a.formula);
  std::cout << "formula            " << comp.to_string() << "\n"
            << "density            " << fmt(a.density) << " g/cm^3\n"
            << "molar_mass         " << fmt(r.molar_mass) << " g/mol\n"
            << "number_density     " << fmt(r.number_density) << " 1/cm^3\n"
            << "molecular_volume   " << fmt(r.molecular_volume) << " Ang^3\n"
            << "sld_real           " << fmt(r.sld_real) << " 1e-6/Ang^2\n"
            << "sld_imag           " << fmt(r.sld_imag) << " 1e-6/Ang^2\n"
            << "sld_xray           " << fmt(r.sld_xray) << " 1e-6/Ang^2\n";
  return kExitOk;
}

// generate

struct GenerateArgs {
  std::string model;
  std::vector<std::string> set;
  double qmin = kDefaultQmin;
  double qmax = kDefaultQmax;
  int n = kDefaultQPoints;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string plot;
};

int run_generate(const GenerateArgs& a) {
  const Dataset d = generate_dataset(a.model, assignments(a.set, "--set"), default_qgrid(a.qmin, a.qmax, a.n),
                                     a.noise, a.seed);
  const std::string text = save_ascii(d);
  if (a.out.empty()) std::cout << text;
  else write_file(a.out, text);
  if (!a.plot.empty()) write_file(a.plot, render_svg(agent::tooldetail::generation_plot(a.model, d)));
  if (!a.out.empty())
    std::cerr << "wrote " << d.size() << " points to " << a.out << "\n";
  return kExitOk;
}

// fit

struct FitArgs {
  std::string file;
  std::string model;
  std::vector<std::string> fix, init, bound;
  std::string plot;
  int max_iter = 200;
};

int run_fit(const FitArgs& a) {
  const ParsedFile parsed = load_ascii(read_file(a.file), a.file);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  const FitProblem problem = FitProblem::from_settings(a.model, parsed.dataset, assignments(a.fix, "--fix"),
                                                       assignments(a.init, "--init"), bound_map(a.bound));
  FitOptions opts;
  opts.max_iter = a.max_iter;
  const FitResult result = fit_lm(problem, opts);
  std::cout << fit_report(problem, result).to_text();
  if (!a.plot.empty()) write_file(a.plot, render_svg(agent::tooldetail::fit_plot(problem, result)));
  return result.converged ? kExitOk : kExitNoConvergence;
}

// models, search-docs

int run_models_list() {
  for (const auto& info : list_models()) std::cout << info.name << "  " << info.summary << "\n";
  return kExitOk;
}

int run_models_doc(const std::string& name) {
  std::cout << ModelRegistry::builtin().get(name).info.doc_text();
  return kExitOk;
}

int run_search(const std::string& query, std::size_t k, const std::string& docs_dir) {
  for (const auto& hit : make_docs(docs_dir)->search(query, k)) {
    std::string snippet = hit.snippet;
    for (auto& c : snippet)
      if (c == '\n') c = ' ';
    std::cout << hit.doc_id << "  " << fmt(hit.score, 4) << "\n    " << snippet << "\n";
  }
  return kExitOk;
}

// serve, chat

struct AgentArgs {
  std::string backend = "scripted";
  std::string scenario;
  std::string model;
  std::string docs_dir;
};

std::shared_ptr<agent::SettingsStore> make_settings(const AgentArgs& a) {
  agent::Settings s;
  s.backend = a.backend;
  if (!a.model.empty()) s.model = a.model;
  return std::make_shared<agent::SettingsStore>(s);
}

struct ServeArgs {
  std::string addr = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
  std::string data_dir;
};

int run_serve(const AgentArgs& a, const ServeArgs& s) {
  auto settings = make_settings(a);
  ServiceConfig cfg;
  cfg.ui_dir = s.ui_dir;
  cfg.data_dir = s.data_dir;
  Service service(cfg, make_backend(a.backend, a.scenario, settings), settings, make_docs(a.docs_dir));
  std::cerr << "listening on http://" << s.addr << ":" << s.port << " (backend " << a.backend << ")\n";
  if (!service.listen(s.addr, s.port)) {
    std::cerr << "error: cannot listen on " << s.addr << ":" << s.port << "\n";
    return kExitInput;
  }
  return kExitOk;
}

struct ChatArgs {
  std::vector<std::string> prompts;
  std::vector<std::string> uploads;
  bool show_log = false;
  std::string plot_dir;
};

int run_chat(const AgentArgs& a, const ChatArgs& c) {
  auto settings = make_settings(a);
  auto docs = make_docs(a.docs_dir);
  agent::AgentSystem system(make_backend(a.backend, a.scenario, settings), settings,
                            agent::ToolContext{&ModelRegistry::builtin(), docs.get()});
  agent::SessionState session;
  if (!c.plot_dir.empty()) std::filesystem::create_directories(c.plot_dir);
  for (const auto& path : c.uploads) {
    const ParsedFile parsed = load_ascii(read_file(path), path);
    const auto name = std::filesystem::path(path).filename().string();
    const auto id = session.add_file(name, parsed.dataset);
    std::cout << "[uploaded " << name << " as " << id << ", " << parsed.dataset.size() << " points]\n";
  }

  bool backend_failed = false;
  std::size_t cursor = 0;
  auto turn = [&](const std::string& text) {
    std::cout << "> " << text << "\n";
    const agent::AgentReply reply = system.handle_user_turn(text, session);
    if (c.show_log)
      for (const auto& line : session.logs_since(cursor)) std::cout << "  | " << line << "\n";
    cursor = session.log_size();
    std::cout << "[" << reply.agent << "] " << reply.final_text << "\n";
    for (const auto& id : reply.plot_ids) {
      std::cout << "[plot " << id << "]\n";
      if (!c.plot_dir.empty())
        if (auto p = session.plot(id)) write_file((std::filesystem::path(c.plot_dir) / (id + ".svg")).string(), render_svg(*p));
    }
    std::cout << "\n";
    backend_failed = backend_failed || reply.backend_failed;
  };

  if (!c.prompts.empty()) {
    for (const auto& p : c.prompts) turn(p);
  } else {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line == "exit" || line == "quit") break;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      turn(line);
    }
  }
  return backend_failed ? kExitBackend : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-angle scattering toolkit: SLD, model curves, fitting, documentation search and chat agents"};
  app.require_subcommand(1);

  SldArgs sld;
  auto* sld_cmd = app.add_subcommand("sld", "Scattering length densities of a compound");
  sld_cmd->add_option("formula", sld.formula, "Chemical formula, e.g. D2O, C2H6OS, H[2]2O")->required();
  sld_cmd->add_option("--density", sld.density, "Mass density in g/cm^3")->required();

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Synthetic I(q) from a model");
  gen_cmd->add_option("--model", gen.model, "Model name")->required();
  gen_cmd->add_option("--set", gen.set, "Parameter value, name=value (repeatable)");
  gen_cmd->add_option("--qmin", gen.qmin, "Lowest q (1/Ang)");
  gen_cmd->add_option("--qmax", gen.qmax, "Highest q (1/Ang)");
  gen_cmd->add_option("--n", gen.n, "Number of log-spaced q points");
  gen_cmd->add_option("--noise", gen.noise, "Relative Gaussian noise, 0 <= f < 1");
  gen_cmd->add_option("--seed", gen.seed, "Noise seed");
  gen_cmd->add_option("--out", gen.out, "Output data file (default stdout)");
  gen_cmd->add_option("--plot", gen.plot, "Write an SVG plot");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Least-squares fit of a model to a data file");
  fit_cmd->add_option("datafile", fit.file, "q I [dI] text file")->required();
  fit_cmd->add_option("--model", fit.model, "Model name")->required();
  fit_cmd->add_option("--fix", fit.fix, "Hold a parameter, name=value (repeatable)");
  fit_cmd->add_option("--init", fit.init, "Initial value, name=value (repeatable)");
  fit_cmd->add_option("--bound", fit.bound, "Bounds, name=lo,hi (repeatable)");
  fit_cmd->add_option("--plot", fit.plot, "Write an SVG plot of data, fit and residuals");
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration limit");

  auto* models_cmd = app.add_subcommand("models", "Model catalogue");
  models_cmd->require_subcommand(1);
  auto* models_list = models_cmd->add_subcommand("list", "List the available models");
  std::string doc_name;
  auto* models_doc = models_cmd->add_subcommand("doc", "Print a model's documentation");
  models_doc->add_option("name", doc_name, "Model name")->required();

  std::string query, docs_dir;
  std::size_t k = 3;
  auto* search_cmd = app.add_subcommand("search-docs", "BM25 search over the model documentation");
  search_cmd->add_option("query", query, "Search words")->required();
  search_cmd->add_option("--k", k, "Number of hits");
  search_cmd->add_option("--docs-dir", docs_dir, "Extra .txt/.md/.rst documents");

  AgentArgs agent_args;
  auto add_agent_options = [&](CLI::App* cmd) {
    cmd->add_option("--backend", agent_args.backend, "scripted or openrouter")
        ->check(CLI::IsMember({"scripted", "openrouter"}));
    cmd->add_option("--scenario", agent_args.scenario, "Scenario file for the scripted backend");
    cmd->add_option("--llm", agent_args.model, "Chat model id for the openrouter backend");
    cmd->add_option("--docs-dir", agent_args.docs_dir, "Extra .txt/.md/.rst documents");
  };

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--addr", serve.addr, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port");
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Static web UI directory served at /");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Directory where uploads and plots are kept");
  add_agent_options(serve_cmd);

  ChatArgs chat;
  auto* chat_cmd = app.add_subcommand("chat", "Chat with the agents in the terminal (prompts from --prompt or stdin)");
  add_agent_options(chat_cmd);
  chat_cmd->add_option("--prompt", chat.prompts, "Prompt to send (repeatable); stdin lines otherwise");
  chat_cmd->add_option("--upload", chat.uploads, "Data file to upload before chatting (repeatable)");
  chat_cmd->add_flag("--log", chat.show_log, "Print the agent log after each turn");
  chat_cmd->add_option("--plot-dir", chat.plot_dir, "Write each produced plot as SVG here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*sld_cmd) return run_sld(sld);
    if (*gen_cmd) return run_generate(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*models_list) return run_models_list();
    if (*models_doc) return run_models_doc(doc_name);
    if (*search_cmd) return run_search(query, k, docs_dir);
    if (*serve_cmd) return run_serve(agent_args, serve);
    if (*chat_cmd) return run_chat(agent_args, chat);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::BackendError ? kExitBackend : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
