#include "palpation/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Geometry>
#include <json.hpp>

#include "palpation/errors.hpp"

namespace palpation {

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (const Vec3& v : vertices_)
        if (!v.allFinite())
            throw InvalidInput("mesh vertex has non-finite coordinates");
    normals_.reserve(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face& face = faces_[f];
        for (auto idx : face)
            if (idx >= vertices_.size())
                throw InvalidInput("face " + std::to_string(f) + " references vertex " +
                                   std::to_string(idx) + " of " + std::to_string(vertices_.size()));
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            throw InvalidInput("face " + std::to_string(f) + " repeats a vertex");
        const Vec3 n = (vertices_[face[1]] - vertices_[face[0]])
                           .cross(vertices_[face[2]] - vertices_[face[0]]);
        const double len = n.norm();
        if (!(len > 0.0))
            throw InvalidInput("face " + std::to_string(f) + " has zero area");
        normals_.push_back(n / len);
    }
}

// Region-based closest point (Voronoi regions of vertices, edges, interior).
Vec3 closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = q - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0)
        return a;

    const Vec3 bp = q - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3)
        return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        return a + ab * (d1 / (d1 - d3));

    const Vec3 cp = q - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6)
        return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        return a + ac * (d2 / (d2 - d6));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

void consider_face(const TriMesh& mesh, std::size_t f, const Vec3& query, double& best_sq,
                   ClosestPointResult& best) {
    const Vec3 p = closest_point_on_triangle(query, mesh.corner(f, 0), mesh.corner(f, 1),
                                             mesh.corner(f, 2));
    const double d = (query - p).squaredNorm();
    if (d < best_sq || (d == best_sq && f < best.face_index)) {
        best_sq = d;
        best.point = p;
        best.face_index = f;
    }
}

ClosestPointResult finish(const TriMesh& mesh, ClosestPointResult r, double best_sq) {
    r.normal = mesh.face_normals()[r.face_index];
    r.distance = std::sqrt(best_sq);
    return r;
}

}  // namespace

ClosestPointResult closest_point(const TriMesh& mesh, const Vec3& query) {
    if (mesh.empty())
        throw InvalidInput("closest_point: empty mesh");
    double best_sq = std::numeric_limits<double>::infinity();
    ClosestPointResult best;
    best.face_index = std::numeric_limits<std::size_t>::max();
    for (std::size_t f = 0; f < mesh.face_count(); ++f)
        consider_face(mesh, f, query, best_sq, best);
    return finish(mesh, best, best_sq);
}

std::optional<RayHit> raycast(const TriMesh& mesh, const Vec3& origin, const Vec3& direction) {
    std::optional<RayHit> hit;
    constexpr double eps = 1e-12;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const Vec3 a = mesh.corner(f, 0);
        const Vec3 e1 = mesh.corner(f, 1) - a;
        const Vec3 e2 = mesh.corner(f, 2) - a;
        const Vec3 pvec = direction.cross(e2);
        const double det = e1.dot(pvec);
        if (std::abs(det) < eps)
            continue;
        const double inv = 1.0 / det;
        const Vec3 tvec = origin - a;
        const double u = tvec.dot(pvec) * inv;
        if (u < 0.0 || u > 1.0)
            continue;
        const Vec3 qvec = tvec.cross(e1);
        const double v = direction.dot(qvec) * inv;
        if (v < 0.0 || u + v > 1.0)
            continue;
        const double t = e2.dot(qvec) * inv;
        if (t <= 0.0 || (hit && t >= hit->t))
            continue;
        hit = RayHit{a + u * e1 + v * e2, mesh.face_normals()[f], f, t};
    }
    return hit;
}

MeshIndex::MeshIndex(const TriMesh& mesh) : mesh_(&mesh) {
    if (mesh.empty())
        throw InvalidInput("MeshIndex: empty mesh");
    const auto n = static_cast<std::uint32_t>(mesh.face_count());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    face_boxes_.reserve(n);
    for (std::size_t f = 0; f < n; ++f) {
        Eigen::AlignedBox3d box(mesh.corner(f, 0));
        box.extend(mesh.corner(f, 1));
        box.extend(mesh.corner(f, 2));
        face_boxes_.push_back(box);
    }
    nodes_.reserve(2 * n);
    build(0, n);
}

std::uint32_t MeshIndex::build(std::uint32_t begin, std::uint32_t end) {
    constexpr std::uint32_t kLeafSize = 4;
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d centroids;
    for (std::uint32_t i = begin; i < end; ++i) {
        box.extend(face_boxes_[order_[i]]);
        centroids.extend(face_boxes_[order_[i]].center());
    }
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].count = end - begin;
        return id;
    }
    int axis = 0;
    centroids.sizes().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t l, std::uint32_t r) {
                         const double cl = face_boxes_[l].center()(axis);
                         const double cr = face_boxes_[r].center()(axis);
                         return cl < cr || (cl == cr && l < r);
                     });
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

ClosestPointResult MeshIndex::closest_point(const Vec3& query) const {
    double best_sq = std::numeric_limits<double>::infinity();
    ClosestPointResult best;
    best.face_index = std::numeric_limits<std::size_t>::max();

    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        // Boxes at exactly best distance are still visited so that ties resolve
        // to the lowest face index, as in the exhaustive scan.
        if (node.box.squaredExteriorDistance(query) > best_sq)
            continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i)
                consider_face(*mesh_, order_[i], query, best_sq, best);
            continue;
        }
        const double dl = nodes_[node.left].box.squaredExteriorDistance(query);
        const double dr = nodes_[node.right].box.squaredExteriorDistance(query);
        // push the farther child first so the nearer one is explored first
        if (dl < dr) {
            stack[top++] = node.right;
            stack[top++] = node.left;
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return finish(*mesh_, best, best_sq);
}

MeshStats mesh_stats(const TriMesh& mesh) {
    MeshStats s;
    s.vertex_count = mesh.vertices().size();
    s.face_count = mesh.face_count();
    if (!mesh.vertices().empty()) {
        Eigen::AlignedBox3d box;
        for (const Vec3& v : mesh.vertices())
            box.extend(v);
        s.bbox_min = box.min();
        s.bbox_max = box.max();
    }
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const Face& face = mesh.faces()[f];
        for (int k = 0; k < 3; ++k) {
            auto a = face[k];
            auto b = face[(k + 1) % 3];
            if (a > b)
                std::swap(a, b);
            ++edge_use[{a, b}];
        }
        s.surface_area += 0.5 * (mesh.corner(f, 1) - mesh.corner(f, 0))
                                    .cross(mesh.corner(f, 2) - mesh.corner(f, 0))
                                    .norm();
    }
    for (const auto& [edge, uses] : edge_use) {
        if (uses == 1)
            ++s.boundary_edges;
        else if (uses > 2)
            ++s.non_manifold_edges;
    }
    return s;
}

namespace {

std::uint32_t resolve_obj_index(const std::string& token, std::size_t vertex_count,
                                std::size_t line_no) {
    const std::string head = token.substr(0, token.find('/'));
    long idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stol(head, &used);
        if (used != head.size())
            throw std::invalid_argument(head);
    } catch (const std::exception&) {
        throw InvalidInput("OBJ line " + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
    if (idx < 0)
        idx = static_cast<long>(vertex_count) + idx + 1;
    if (idx < 1 || static_cast<std::size_t>(idx) > vertex_count)
        throw InvalidInput("OBJ line " + std::to_string(line_no) + ": face index out of range");
    return static_cast<std::uint32_t>(idx - 1);
}

}  // namespace

TriMesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open mesh file " + path.string());
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#')
            continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                throw InvalidInput("OBJ line " + std::to_string(line_no) + ": malformed vertex");
            vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<std::string> tokens;
            for (std::string t; ls >> t;)
                tokens.push_back(t);
            if (tokens.size() != 3)
                throw InvalidInput("OBJ line " + std::to_string(line_no) + ": face has " +
                                   std::to_string(tokens.size()) + " vertices, only triangles supported");
            Face face{};
            for (int k = 0; k < 3; ++k)
                face[k] = resolve_obj_index(tokens[k], vertices.size(), line_no);
            faces.push_back(face);
        }
        // vn, vt, o, g, s, usemtl, mtllib: ignored
    }
    return TriMesh(std::move(vertices), std::move(faces));
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write mesh file " + path.string());
    out << std::setprecision(17);
    for (const Vec3& v : mesh.vertices())
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Face& f : mesh.faces())
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

TriMesh load_mesh_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open mesh file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("mesh JSON parse error in " + path.string() + ": " + e.what());
    }
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    try {
        for (const auto& key : doc.items())
            if (key.key() != "vertices" && key.key() != "faces")
                throw InvalidInput("mesh JSON: unknown key '" + key.key() + "'");
        for (const auto& v : doc.at("vertices")) {
            if (v.size() != 3)
                throw InvalidInput("mesh JSON: vertex must have 3 coordinates");
            vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
        }
        for (const auto& f : doc.at("faces")) {
            if (f.size() != 3)
                throw InvalidInput("mesh JSON: only triangle faces are supported");
            faces.push_back({f[0].get<std::uint32_t>(), f[1].get<std::uint32_t>(),
                             f[2].get<std::uint32_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("mesh JSON: " + std::string(e.what()));
    }
    return TriMesh(std::move(vertices), std::move(faces));
}

void save_mesh_json(const TriMesh& mesh, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["vertices"] = nlohmann::json::array();
    for (const Vec3& v : mesh.vertices())
        doc["vertices"].push_back({v.x(), v.y(), v.z()});
    doc["faces"] = nlohmann::json::array();
    for (const Face& f : mesh.faces())
        doc["faces"].push_back({f[0], f[1], f[2]});
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write mesh file " + path.string());
    out << doc.dump() << '\n';
}

TriMesh load_mesh(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj")
        return load_obj(path);
    if (ext == ".json")
        return load_mesh_json(path);
    throw InvalidInput("unsupported mesh format '" + ext + "' (expected .obj or .json)");
}

}  // namespace palpation
