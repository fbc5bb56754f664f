#include "nmp/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "nmp/textio.hpp"

namespace nmp {

namespace {

void write_matrix(std::ostream& out, const char* tag, const Mat& m) {
  out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_g17(m(i, j));
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const char* tag, const Vec& v) {
  out << tag << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_g17(v[i]);
  }
  out << '\n';
}

struct Reader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  std::string next_line() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty()) return line;
    }
    throw ParseError(path, line_no, "unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(path, line_no, what);
  }
};

Mat read_matrix(Reader& r, const std::string& tag) {
  std::istringstream head(r.next_line());
  std::string got;
  Eigen::Index rows = 0, cols = 0;
  if (!(head >> got >> rows >> cols) || got != tag) {
    r.fail("expected '" + tag + " <rows> <cols>'");
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::istringstream row(r.next_line());
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(row >> m(i, j))) r.fail(tag + ": short row");
    }
  }
  return m;
}

Vec read_vector(Reader& r, const std::string& tag) {
  std::istringstream head(r.next_line());
  std::string got;
  Eigen::Index n = 0;
  if (!(head >> got >> n) || got != tag) {
    r.fail("expected '" + tag + " <n>'");
  }
  Vec v(n);
  if (n == 0) return v;
  std::istringstream row(r.next_line());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(row >> v[i])) r.fail(tag + ": short vector");
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::vector<NamedNetwork>& nets,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-ckpt v1\n";
  for (const auto& [name, net] : nets) {
    out << "[network " << name << "]\n";
    out << "layers " << net.layer_count() << '\n';
    for (const LayerSpec& spec : net.specs) {
      out << "layer " << spec.input_width << ' ' << spec.output_width << ' '
          << to_string(spec.activation) << ' ' << format_g17(spec.weight_decay)
          << '\n';
    }
    out << "step " << net.step_count << '\n';
    for (int l = 0; l < net.layer_count(); ++l) {
      write_matrix(out, "W", net.weights[l]);
      write_vector(out, "b", net.biases[l]);
      write_matrix(out, "mW", net.m_w[l]);
      write_matrix(out, "vW", net.v_w[l]);
      write_vector(out, "mb", net.m_b[l]);
      write_vector(out, "vb", net.v_b[l]);
    }
  }
}

std::vector<NamedNetwork> load_checkpoint(const std::string& path) {
  Reader r{std::ifstream(path), path};
  if (!r.in) throw std::runtime_error("cannot read " + path);
  {
    std::string header;
    if (!std::getline(r.in, header) || header != "nmp-ckpt v1") {
      throw ParseError(path, 1, "expected header 'nmp-ckpt v1'");
    }
    r.line_no = 1;
  }
  std::vector<NamedNetwork> nets;
  std::string line;
  while (std::getline(r.in, line)) {
    ++r.line_no;
    if (line.empty()) continue;
    if (line.rfind("[network ", 0) != 0 || line.back() != ']') {
      r.fail("expected '[network <name>]'");
    }
    NamedNetwork entry;
    entry.name = line.substr(9, line.size() - 10);

    std::istringstream head(r.next_line());
    std::string tag;
    int layers = 0;
    if (!(head >> tag >> layers) || tag != "layers" || layers <= 0) {
      r.fail("expected 'layers <n>'");
    }
    for (int l = 0; l < layers; ++l) {
      std::istringstream spec_line(r.next_line());
      LayerSpec spec;
      std::string act;
      if (!(spec_line >> tag >> spec.input_width >> spec.output_width >> act >>
            spec.weight_decay) ||
          tag != "layer") {
        r.fail("expected 'layer <in> <out> <activation> <weight_decay>'");
      }
      spec.activation = activation_from_string(act);
      entry.net.specs.push_back(spec);
    }
    {
      std::istringstream step_line(r.next_line());
      if (!(step_line >> tag >> entry.net.step_count) || tag != "step") {
        r.fail("expected 'step <n>'");
      }
    }
    for (int l = 0; l < layers; ++l) {
      const LayerSpec& spec = entry.net.specs[l];
      auto expect_shape = [&](const Mat& m, const char* what) {
        if (m.rows() != spec.output_width || m.cols() != spec.input_width) {
          r.fail(std::string(what) + ": shape mismatch");
        }
      };
      Mat w = read_matrix(r, "W");
      expect_shape(w, "W");
      Vec b = read_vector(r, "b");
      if (b.size() != spec.output_width) r.fail("b: shape mismatch");
      Mat mw = read_matrix(r, "mW");
      expect_shape(mw, "mW");
      Mat vw = read_matrix(r, "vW");
      expect_shape(vw, "vW");
      Vec mb = read_vector(r, "mb");
      Vec vb = read_vector(r, "vb");
      if (mb.size() != spec.output_width || vb.size() != spec.output_width) {
        r.fail("adam bias state: shape mismatch");
      }
      entry.net.weights.push_back(std::move(w));
      entry.net.biases.push_back(std::move(b));
      entry.net.m_w.push_back(std::move(mw));
      entry.net.v_w.push_back(std::move(vw));
      entry.net.m_b.push_back(std::move(mb));
      entry.net.v_b.push_back(std::move(vb));
    }
    nets.push_back(std::move(entry));
  }
  return nets;
}

bool has_network(const std::vector<NamedNetwork>& nets,
                 const std::string& name) {
  for (const auto& entry : nets) {
    if (entry.name == name) return true;
  }
  return false;
}

const Mlp<double>& find_network(const std::vector<NamedNetwork>& nets,
                                const std::string& name) {
  for (const auto& entry : nets) {
    if (entry.name == name) return entry.net;
  }
  throw std::runtime_error("checkpoint has no network named '" + name + "'");
}

}  // namespace nmp
